#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "signmix/grouping.hpp"
#include "test_util.hpp"

using namespace signmix;

namespace {

TemplateScoreTable random_table(std::mt19937_64& rng, std::size_t n, int levels = 0) {
  TemplateScoreTable t;
  for (std::size_t i = 0; i < n; ++i) t.labels.push_back(oracle::id("g", static_cast<int>(i)));
  t.scores.resize(n * n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      // coarse levels force ties
      double v = levels ? static_cast<double>(rng() % static_cast<unsigned>(levels) + 1) : u(rng);
      t.at(i, j) = v;
      sum += v;
    }
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) /= sum;
  }
  return t;
}

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::id("g", static_cast<int>(i)));
  return out;
}

}  // namespace

TEST(Grouping, PairKeyIsOrdered) {
  auto k = make_pair_key("b", "a");
  EXPECT_EQ(k.a, "a");
  EXPECT_EQ(k.b, "b");
  EXPECT_THROW(make_pair_key("a", "a"), std::invalid_argument);
}

TEST(Grouping, TopKMatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    auto n = 2 + rng() % 12;
    auto t = random_table(rng, n, trial % 2 ? 3 : 0);
    auto k = 1 + rng() % std::min<std::size_t>(6, n - 1);  // k < n is required
    auto expect = oracle::brute_topk(t, k);
    auto got = candidate_pairs_from_templates(t, k);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].rank, std::get<0>(expect[i]));
      EXPECT_EQ(got[i].key.a, std::get<1>(expect[i]));
      EXPECT_EQ(got[i].key.b, std::get<2>(expect[i]));
    }
    EXPECT_EQ(candidate_pairs_from_templates_serial(t, k), got);
  }
}

TEST(Grouping, TopKRejectsOutOfRangeK) {
  std::mt19937_64 rng(9);
  auto t = random_table(rng, 4, 0);
  EXPECT_THROW(candidate_pairs_from_templates(t, 0), std::invalid_argument);
  EXPECT_THROW(candidate_pairs_from_templates(t, 4), std::invalid_argument);
  EXPECT_NO_THROW(candidate_pairs_from_templates(t, 3));
}

TEST(Grouping, TableValidation) {
  TemplateScoreTable t;
  t.labels = {"a", "b"};
  t.scores = {0.5, 0.5, 0.2, 0.2};
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.scores = {0.5, 0.5, 0.2};
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Grouping, ScoreTableRoundTrip) {
  testutil::TempDir dir;
  std::mt19937_64 rng(2);
  auto t = random_table(rng, 5);
  save_score_table(t, dir / "t");
  auto back = load_score_table(dir / "t");
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.scores, t.scores);
}

TEST(Grouping, CosineTableRowsAreDistributionsAndFavourNeighbours) {
  // a and b point the same way, c is opposite
  std::vector<double> emb{1, 0, 0.9, 0.1, -1, 0};
  auto t = cosine_score_table({"a", "b", "c"}, emb, 2);
  EXPECT_NO_THROW(t.validate());
  EXPECT_GT(t.at(0, 1), t.at(0, 2));
  auto pairs = candidate_pairs_from_templates(t, 1);
  EXPECT_EQ(pairs.front().key, make_pair_key("a", "b"));
}

TEST(Grouping, ConfusionTableNormalisesRows) {
  std::vector<std::size_t> truth{0, 0, 0, 1}, pred{0, 1, 1, 1};
  auto t = confusion_table({"a", "b", "c"}, truth, pred);
  EXPECT_NEAR(t.at(0, 1), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(t.at(1, 1), 1.0);
  EXPECT_EQ(t.at(2, 2), 1.0);  // no samples: diagonal
  EXPECT_NO_THROW(t.validate());
}

TEST(Grouping, AggregateMatchesMajorityOnEveryPattern) {
  for (unsigned mask = 0; mask < 32; ++mask) {
    for (std::size_t cast = 0; cast <= 5; ++cast) {
      std::vector<VoteRecord> votes;
      std::vector<bool> verdicts;
      for (std::size_t e = 0; e < cast; ++e) {
        bool v = (mask >> e) & 1;
        votes.push_back({make_pair_key("a", "b"), "e" + std::to_string(e), v, 0});
        verdicts.push_back(v);
      }
      auto out = aggregate_votes(votes);
      if (cast == 0) {
        EXPECT_TRUE(out.empty());
        continue;
      }
      ASSERT_EQ(out.size(), 1u);
      EXPECT_EQ(out[0].status, oracle::majority_rule(verdicts, 5, 3)) << "mask " << mask << " cast " << cast;
      EXPECT_EQ(out[0].votes, cast);
    }
  }
}

TEST(Grouping, DuplicateVerdictIsRejected) {
  std::vector<VoteRecord> votes{{make_pair_key("a", "b"), "e", true, 0}, {make_pair_key("b", "a"), "e", false, 1}};
  EXPECT_THROW(aggregate_votes(votes), std::invalid_argument);
  EXPECT_THROW(aggregate_votes({}, 3, 4), std::invalid_argument);
}

TEST(Grouping, VoteRecordRoundTrip) {
  testutil::TempDir dir;
  VoteRecord v{make_pair_key("x y", "z"), "exp 1", true, 1234};
  append_record_durable(dir / "v", vote_record(v));
  auto back = load_votes(dir / "v");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], v);
}

TEST(Grouping, MergeMatchesBfsComponents) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto n = 1 + rng() % 15;
    auto labels = names(n);
    std::vector<PairKey> matched;
    std::vector<std::pair<std::string, std::string>> edges;
    auto m = rng() % (2 * n);
    for (std::size_t e = 0; e < m && n > 1; ++e) {
      auto a = rng() % n, b = rng() % n;
      if (a == b) continue;
      matched.push_back(make_pair_key(labels[a], labels[b]));
      edges.emplace_back(labels[a], labels[b]);
    }
    auto gs = merge_matched(GroupingState(labels), matched);
    std::vector<std::vector<std::string>> got;
    for (const auto& g : gs.groups()) {
      got.push_back(g.members);
      EXPECT_EQ(g.id, g.members.front());
    }
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, oracle::bfs_components(labels, edges));
    EXPECT_EQ(gs.group_count(), got.size());
  }
}

TEST(Grouping, ResolveAcceptsGroupIdsFromManifest) {
  DatasetManifest m;
  m.language = {"x"};
  for (auto g : {"a", "b", "c"}) m.glosses.push_back({g, m.language});
  m.groups = {{"ab", {"a", "b"}}, {"c", {"c"}}};
  GroupingState gs(m);
  EXPECT_EQ(gs.group_count(), 2u);
  EXPECT_TRUE(gs.same_group("a", "ab"));
  EXPECT_FALSE(gs.same_group("a", "c"));
  EXPECT_THROW(gs.resolve("zz"), std::invalid_argument);
}

TEST(Grouping, EnqueueSkipsMergedAndDropsAfterMerge) {
  GroupingState gs(names(4));
  std::vector<CandidatePair> pairs{{make_pair_key("g000", "g001"), 1, PairSource::template_similarity},
                                   {make_pair_key("g001", "g002"), 2, PairSource::template_similarity}};
  gs.enqueue(pairs);
  EXPECT_EQ(gs.pending().size(), 2u);
  std::vector<PairKey> matched{make_pair_key("g000", "g001"), make_pair_key("g001", "g002")};
  gs = merge_matched(gs, matched);
  EXPECT_TRUE(gs.pending().empty());
  gs.enqueue(pairs);
  EXPECT_TRUE(gs.pending().empty());
}

TEST(Grouping, RefinementMatchesBruteForceRanking) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto n = 2 + rng() % 10;
    auto t = random_table(rng, n, 4);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (rng() % 3 == 0) t.at(i, j) = 0.0;
      }
    }
    GroupingState gs(t.labels);
    if (n > 3) {
      std::vector<PairKey> m{make_pair_key(t.labels[0], t.labels[1])};
      gs = merge_matched(gs, m);
    }
    // brute force: all unmerged pairs with positive mass, sorted by (-mass, key)
    std::vector<std::pair<double, PairKey>> all;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double mass = t.at(i, j) + t.at(j, i);
        if (mass <= 0.0 || gs.same_group(t.labels[i], t.labels[j])) continue;
        all.emplace_back(-mass, make_pair_key(t.labels[i], t.labels[j]));
      }
    }
    std::sort(all.begin(), all.end());
    auto top = 1 + rng() % 8;
    auto got = refinement_candidates(t, gs, top);
    ASSERT_EQ(got.size(), std::min<std::size_t>(top, all.size()));
    for (std::size_t r = 0; r < got.size(); ++r) {
      EXPECT_EQ(got[r].key, all[r].second);
      EXPECT_EQ(got[r].rank, static_cast<int>(r + 1));
      EXPECT_EQ(got[r].source, PairSource::confusion_refinement);
    }
  }
}

TEST(Grouping, WithGroupsProducesValidManifest) {
  std::mt19937_64 rng(5);
  auto m = oracle::random_manifest(rng, 3, 5);
  GroupingState gs(m);
  std::vector<PairKey> matched{make_pair_key("g001", "g003")};
  auto out = with_groups(m, merge_matched(gs, matched));
  EXPECT_EQ(out.groups.size(), 4u);
  std::vector<std::string> labels{"g003"};
  EXPECT_EQ(project_to_groups(out, labels).front(), "g001");
}

TEST(Grouping, PairFileRoundTrip) {
  testutil::TempDir dir;
  std::vector<CandidatePair> pairs{{make_pair_key("a", "b"), 2, PairSource::confusion_refinement}};
  write_records(dir / "p", {pair_record(pairs[0])});
  EXPECT_EQ(load_pairs(dir / "p"), pairs);
}
