#include "signmix/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace signmix {

void TemplateScoreTable::validate() const {
  const auto n = labels.size();
  if (scores.size() != n * n) throw std::invalid_argument("score table is not square over its labels");
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double v = at(i, j);
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("score row '" + labels[i] + "' has invalid entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("score row '" + labels[i] + "' is not normalised");
  }
}

TemplateScoreTable cosine_score_table(std::vector<std::string> labels, std::span<const double> embeddings,
                                      std::size_t dim) {
  const auto n = labels.size();
  if (embeddings.size() != n * dim) throw std::invalid_argument("embedding matrix has wrong size");
  TemplateScoreTable t{std::move(labels), std::vector<double>(n * n, 0.0)};
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) norms[i] += embeddings[i * dim + k] * embeddings[i * dim + k];
    norms[i] = std::sqrt(norms[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += embeddings[i * dim + k] * embeddings[j * dim + k];
      double denom = norms[i] * norms[j];
      double cos = denom > 0.0 ? dot / denom : (i == j ? 1.0 : 0.0);
      t.at(i, j) = cos + 1.0;
      sum += t.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) /= sum;
  }
  return t;
}

TemplateScoreTable confusion_table(std::vector<std::string> labels, std::span<const std::size_t> truth,
                                   std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth/prediction length mismatch");
  const auto n = labels.size();
  TemplateScoreTable t{std::move(labels), std::vector<double>(n * n, 0.0)};
  std::vector<double> row_total(n, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n || predicted[i] >= n) throw std::invalid_argument("class index out of range");
    t.at(truth[i], predicted[i]) += 1.0;
    row_total[truth[i]] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (row_total[i] == 0.0) {
      t.at(i, i) = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) /= row_total[i];
  }
  return t;
}

TemplateScoreTable load_score_table(const std::filesystem::path& path) {
  auto records = read_records(path);
  TemplateScoreTable t;
  bool header = false;
  std::size_t row = 0;
  for (const auto& [line, rec] : records) {
    try {
      if (!header) {
        if (rec.kind() != "scores") throw std::invalid_argument("first record must be 'scores'");
        rec.expect_fields({"labels"});
        t.labels = rec.get_list("labels");
        t.scores.assign(t.labels.size() * t.labels.size(), 0.0);
        header = true;
        continue;
      }
      if (rec.kind() != "row") throw std::invalid_argument("unexpected record '" + rec.kind() + "'");
      rec.expect_fields({"label", "values"});
      if (row >= t.labels.size()) throw std::invalid_argument("more rows than labels");
      if (rec.get("label") != t.labels[row]) throw std::invalid_argument("rows must follow label order");
      auto values = rec.get_doubles("values");
      if (values.size() != t.labels.size()) throw std::invalid_argument("row length differs from label count");
      std::copy(values.begin(), values.end(), t.scores.begin() + static_cast<std::ptrdiff_t>(row * t.labels.size()));
      ++row;
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  if (!header) throw ParseError(0, "missing scores header");
  if (row != t.labels.size()) throw ParseError(0, "score table has missing rows");
  t.validate();
  return t;
}

void save_score_table(const TemplateScoreTable& t, const std::filesystem::path& path) {
  std::vector<Record> out;
  out.push_back(Record("scores").add_list("labels", t.labels));
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::vector<double> row(t.scores.begin() + static_cast<std::ptrdiff_t>(i * t.size()),
                            t.scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * t.size()));
    out.push_back(Record("row").add("label", t.labels[i]).add_doubles("values", row));
  }
  write_records(path, out);
}

const char* to_string(PairSource s) {
  return s == PairSource::template_similarity ? "template_similarity" : "confusion_refinement";
}

PairSource pair_source_from_string(const std::string& s) {
  if (s == "template_similarity") return PairSource::template_similarity;
  if (s == "confusion_refinement") return PairSource::confusion_refinement;
  throw std::invalid_argument("unknown pair source '" + s + "'");
}

PairKey make_pair_key(std::string x, std::string y) {
  if (x == y) throw std::invalid_argument("pair of identical labels '" + x + "'");
  if (y < x) std::swap(x, y);
  return {std::move(x), std::move(y)};
}

namespace {

std::vector<CandidatePair> row_candidates(const TemplateScoreTable& t, std::size_t row, std::size_t k) {
  const auto n = t.size();
  std::vector<std::size_t> cols;
  cols.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != row) cols.push_back(j);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    double sa = t.at(row, a), sb = t.at(row, b);
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(k), cols.end(), better);
  std::vector<CandidatePair> out;
  for (std::size_t r = 0; r < k; ++r) {
    out.push_back({make_pair_key(t.labels[row], t.labels[cols[r]]), static_cast<int>(r + 1),
                   PairSource::template_similarity});
  }
  return out;
}

void check_candidate_args(const TemplateScoreTable& t, std::size_t k) {
  t.validate();
  if (k < 1 || k >= t.size()) throw std::invalid_argument("k must satisfy 1 <= k < vocabulary size");
}

std::vector<CandidatePair> merge_rows(const std::vector<std::vector<CandidatePair>>& rows) {
  std::map<PairKey, int> best;
  for (const auto& row : rows) {
    for (const auto& c : row) {
      auto [it, inserted] = best.emplace(c.key, c.rank);
      if (!inserted) it->second = std::min(it->second, c.rank);
    }
  }
  std::vector<CandidatePair> out;
  out.reserve(best.size());
  for (const auto& [key, rank] : best) out.push_back({key, rank, PairSource::template_similarity});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return out;
}

}  // namespace

std::vector<CandidatePair> candidate_pairs_from_templates_serial(const TemplateScoreTable& t, std::size_t k) {
  check_candidate_args(t, k);
  std::vector<std::vector<CandidatePair>> rows(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) rows[i] = row_candidates(t, i, k);
  return merge_rows(rows);
}

std::vector<CandidatePair> candidate_pairs_from_templates(const TemplateScoreTable& t, std::size_t k) {
  check_candidate_args(t, k);
  const auto n = static_cast<std::int64_t>(t.size());
  std::vector<std::vector<CandidatePair>> rows(t.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    rows[static_cast<std::size_t>(i)] = row_candidates(t, static_cast<std::size_t>(i), k);
  }
  return merge_rows(rows);
}

Record vote_record(const VoteRecord& v) {
  return Record("vote")
      .add("a", v.pair.a)
      .add("b", v.pair.b)
      .add("expert", v.expert)
      .add("verdict", v.verdict)
      .add("timestamp", v.timestamp);
}

VoteRecord vote_from_record(const Record& r) {
  if (r.kind() != "vote") throw std::invalid_argument("expected 'vote' record, got '" + r.kind() + "'");
  r.expect_fields({"a", "b", "expert", "verdict", "timestamp"});
  VoteRecord v;
  v.pair = make_pair_key(r.get("a"), r.get("b"));
  v.expert = r.get("expert");
  if (v.expert.empty()) throw std::invalid_argument("vote with empty expert id");
  v.verdict = r.get_bool("verdict");
  v.timestamp = r.get_int("timestamp");
  return v;
}

std::vector<VoteRecord> load_votes(const std::filesystem::path& path) {
  std::vector<VoteRecord> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto& [line, rec] : read_records(path)) {
    try {
      out.push_back(vote_from_record(rec));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

const char* to_string(Adjudication a) {
  switch (a) {
    case Adjudication::matched:
      return "matched";
    case Adjudication::rejected:
      return "rejected";
    case Adjudication::pending:
      return "pending";
  }
  return "pending";
}

std::vector<PairOutcome> aggregate_votes(std::span<const VoteRecord> votes, std::size_t quorum,
                                         std::size_t majority) {
  if (quorum == 0 || majority == 0 || majority > quorum) {
    throw std::invalid_argument("need 0 < majority <= quorum");
  }
  std::map<PairKey, PairOutcome> by_pair;
  std::set<std::pair<PairKey, std::string>> seen;
  for (const auto& v : votes) {
    if (!seen.emplace(v.pair, v.expert).second) {
      throw std::invalid_argument("duplicate verdict by expert '" + v.expert + "' on pair (" + v.pair.a + ", " +
                                  v.pair.b + ")");
    }
    auto& o = by_pair[v.pair];
    o.pair = v.pair;
    o.votes += 1;
    o.true_votes += v.verdict ? 1 : 0;
  }
  std::vector<PairOutcome> out;
  out.reserve(by_pair.size());
  for (auto& [key, o] : by_pair) {
    if (o.votes < quorum) {
      o.status = Adjudication::pending;
    } else {
      o.status = o.true_votes >= majority ? Adjudication::matched : Adjudication::rejected;
    }
    out.push_back(o);
  }
  return out;
}

GroupingState::GroupingState(std::vector<std::string> glosses) : glosses_(std::move(glosses)) {
  std::sort(glosses_.begin(), glosses_.end());
  if (std::adjacent_find(glosses_.begin(), glosses_.end()) != glosses_.end()) {
    throw std::invalid_argument("duplicate gloss ids in grouping state");
  }
  for (std::size_t i = 0; i < glosses_.size(); ++i) index_.emplace(glosses_[i], i);
  parent_.resize(glosses_.size());
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

GroupingState::GroupingState(const DatasetManifest& m)
    : GroupingState([&] {
        std::vector<std::string> ids;
        for (const auto& g : m.glosses) ids.push_back(g.id);
        return ids;
      }()) {
  for (const auto& grp : m.groups) {
    auto first = index_.at(grp.members.front());
    for (const auto& member : grp.members) unite(first, index_.at(member));
    group_alias_.emplace(grp.id, first);
  }
}

std::size_t GroupingState::find(std::size_t x) const {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

void GroupingState::unite(std::size_t x, std::size_t y) {
  auto rx = find(x), ry = find(y);
  if (rx == ry) return;
  if (ry < rx) std::swap(rx, ry);
  parent_[ry] = rx;
}

std::size_t GroupingState::resolve(const std::string& label) const {
  if (auto it = index_.find(label); it != index_.end()) return it->second;
  if (auto it = group_alias_.find(label); it != group_alias_.end()) return it->second;
  throw std::invalid_argument("unknown gloss or group label '" + label + "'");
}

bool GroupingState::same_group(const std::string& x, const std::string& y) const {
  return find(resolve(x)) == find(resolve(y));
}

std::size_t GroupingState::group_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < glosses_.size(); ++i) n += find(i) == i;
  return n;
}

std::vector<GroupLabel> GroupingState::groups() const {
  // glosses_ is sorted and roots are the smallest index in their set, so the
  // root's id is the smallest member id.
  std::map<std::size_t, GroupLabel> by_root;
  for (std::size_t i = 0; i < glosses_.size(); ++i) {
    auto& g = by_root[find(i)];
    if (g.members.empty()) g.id = glosses_[find(i)];
    g.members.push_back(glosses_[i]);
  }
  std::vector<GroupLabel> out;
  out.reserve(by_root.size());
  for (auto& [root, g] : by_root) out.push_back(std::move(g));
  return out;
}

void GroupingState::enqueue(std::span<const CandidatePair> pairs) {
  for (const auto& p : pairs) {
    if (!same_group(p.key.a, p.key.b)) pending_.push_back(p);
  }
}

void GroupingState::drop_merged_pending() {
  std::erase_if(pending_, [&](const CandidatePair& p) { return same_group(p.key.a, p.key.b); });
}

GroupingState merge_matched(GroupingState gs, std::span<const PairKey> matched) {
  for (const auto& key : matched) gs.unite(gs.resolve(key.a), gs.resolve(key.b));
  gs.drop_merged_pending();
  return gs;
}

std::vector<CandidatePair> refinement_candidates(const TemplateScoreTable& confusion, const GroupingState& gs,
                                                 std::size_t top_m) {
  struct Scored {
    PairKey key;
    double mass;
  };
  std::vector<Scored> scored;
  const auto n = confusion.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double mass = confusion.at(i, j) + confusion.at(j, i);
      if (!(mass > 0.0)) continue;
      if (gs.same_group(confusion.labels[i], confusion.labels[j])) continue;
      scored.push_back({make_pair_key(confusion.labels[i], confusion.labels[j]), mass});
    }
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    return x.mass != y.mass ? x.mass > y.mass : x.key < y.key;
  });
  std::vector<CandidatePair> out;
  for (std::size_t r = 0; r < std::min(top_m, scored.size()); ++r) {
    out.push_back({scored[r].key, static_cast<int>(r + 1), PairSource::confusion_refinement});
  }
  return out;
}

DatasetManifest with_groups(const DatasetManifest& m, const GroupingState& gs) {
  DatasetManifest out = m;
  out.groups = gs.groups();
  out.validate();
  return out;
}

Record pair_record(const CandidatePair& p) {
  return Record("pair").add("a", p.key.a).add("b", p.key.b).add("rank", p.rank).add("source", to_string(p.source));
}

std::vector<CandidatePair> load_pairs(const std::filesystem::path& path) {
  std::vector<CandidatePair> out;
  for (const auto& [line, rec] : read_records(path)) {
    try {
      if (rec.kind() != "pair") throw std::invalid_argument("expected 'pair' record");
      rec.expect_fields({"a", "b", "rank", "source"});
      out.push_back({make_pair_key(rec.get("a"), rec.get("b")), static_cast<int>(rec.get_int("rank")),
                     pair_source_from_string(rec.get("source"))});
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

}  // namespace signmix
