#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "signmix/batch.hpp"

using namespace signmix;

namespace {

const std::vector<LanguageTag> kLangs{{"a"}, {"b"}, {"c"}};

MixedBatch batch(std::mt19937_64& rng, std::size_t n) {
  return oracle::random_batch(rng, {"a", "b", "c"}, {3, 4, 5}, n, 4, 2);
}

SubBatch sub_of(const MixedBatch& b) {
  SubBatch s;
  s.language = b.items.front().language;
  s.items = b.items;
  for (std::size_t i = 0; i < b.items.size(); ++i) s.origin.push_back(i);
  return s;
}

}  // namespace

TEST(Batch, MakeItemIsOneHot) {
  auto item = make_item("x", {"a"}, {1, 2}, 2, 4, {0.1, -0.1});
  EXPECT_EQ(item.target, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_THROW(make_item("x", {"a"}, {}, 4, 4, {}), std::invalid_argument);
}

TEST(Batch, GateRoutesByLanguageAndPreservesOrder) {
  std::mt19937_64 rng(1);
  auto b = batch(rng, 20);
  auto subs = gate_split(b, kLangs);
  std::size_t total = 0;
  for (const auto& s : subs) {
    EXPECT_FALSE(s.items.empty());
    EXPECT_TRUE(std::is_sorted(s.origin.begin(), s.origin.end()));
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      EXPECT_EQ(s.items[i].language, s.language);
      EXPECT_EQ(s.items[i], b.items[s.origin[i]]);
    }
    total += s.items.size();
  }
  EXPECT_EQ(total, b.size());
  MixedBatch alien;
  alien.items.push_back(make_item("q", {"zz"}, {0}, 0, 1, {}));
  EXPECT_THROW(gate_split(alien, kLangs), std::invalid_argument);
}

TEST(Batch, MergeInvertsGate) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto b = batch(rng, 1 + rng() % 30);
    auto merged = merge_sub_batches(gate_split(b, kLangs));
    EXPECT_EQ(merged.items, b.items);
  }
}

TEST(Batch, MergeRejectsOverlap) {
  std::mt19937_64 rng(3);
  auto subs = gate_split(batch(rng, 6), kLangs);
  subs.front().origin.back() = subs.back().origin.front();
  if (subs.size() > 1) EXPECT_THROW(merge_sub_batches(subs), std::invalid_argument);
}

TEST(Batch, WeightsSumToOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto b = batch(rng, 1 + rng() % 40);
    auto w = language_weights(b);
    double sum = 0.0;
    for (const auto& [lang, x] : w) {
      auto n = std::count_if(b.items.begin(), b.items.end(), [&](const BatchItem& it) { return it.language == lang; });
      EXPECT_EQ(x, static_cast<double>(n) / static_cast<double>(b.size()));
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Batch, MixupIsConvexCombinationWithMirror) {
  std::mt19937_64 rng(5);
  auto b = oracle::random_batch(rng, {"a"}, {3}, 5, 4, 2);
  Rng r(1);
  auto mixed = mix_with_lambda(sub_of(b), MixMode::mixup, 0.7, 4, r);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& self = b.items[i];
    const auto& other = b.items[4 - i];
    for (std::size_t k = 0; k < self.features.size(); ++k) {
      EXPECT_NEAR(mixed.items[i].features[k], 0.7 * self.features[k] + 0.3 * other.features[k], 1e-15);
    }
    double mass = 0.0;
    for (double t : mixed.items[i].target) mass += t;
    EXPECT_NEAR(mass, 1.0, 1e-15);
    EXPECT_NEAR(mixed.items[i].boundary.start, 0.7 * self.boundary.start + 0.3 * other.boundary.start, 1e-15);
  }
}

TEST(Batch, CutMixCopiesAContiguousRun) {
  std::mt19937_64 rng(6);
  auto b = oracle::random_batch(rng, {"a"}, {3}, 4, 10, 2);
  Rng r(2);
  auto mixed = mix_with_lambda(sub_of(b), MixMode::cutmix, 0.7, 10, r);
  // round(0.3 * 10) = 3 frames from the partner
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<int> from_other;
    for (std::size_t t = 0; t < 10; ++t) {
      bool same = std::equal(mixed.items[i].features.begin() + static_cast<std::ptrdiff_t>(2 * t),
                             mixed.items[i].features.begin() + static_cast<std::ptrdiff_t>(2 * t + 2),
                             b.items[i].features.begin() + static_cast<std::ptrdiff_t>(2 * t));
      if (!same) from_other.push_back(static_cast<int>(t));
    }
    ASSERT_EQ(from_other.size(), 3u);
    EXPECT_EQ(from_other.back() - from_other.front(), 2);
    auto lab_self = b.items[i].label, lab_other = b.items[3 - i].label;
    if (lab_self != lab_other) EXPECT_NEAR(mixed.items[i].target[lab_self], 0.7, 1e-12);
  }
}

TEST(Batch, SingletonSubBatchIsUnchanged) {
  std::mt19937_64 rng(7);
  auto b = oracle::random_batch(rng, {"a"}, {3}, 1, 4, 2);
  Rng r(3);
  EXPECT_EQ(mix_with_lambda(sub_of(b), MixMode::mixup, 0.3, 4, r).items, b.items);
  EXPECT_EQ(maybe_mix(sub_of(b), MixConfig{true, 1.0, 0.8, 0.5}, 4, r).items, b.items);
}

TEST(Batch, MixDisabledOrLambdaOneLeavesItems) {
  std::mt19937_64 rng(8);
  auto b = oracle::random_batch(rng, {"a"}, {3}, 6, 4, 2);
  Rng r(4);
  MixConfig off;
  off.enabled = false;
  EXPECT_EQ(maybe_mix(sub_of(b), off, 4, r).items, b.items);
  EXPECT_EQ(mix_with_lambda(sub_of(b), MixMode::mixup, 1.0, 4, r).items, b.items);
  EXPECT_THROW(mix_with_lambda(sub_of(b), MixMode::mixup, 1.5, 4, r), std::invalid_argument);
}

TEST(Batch, BetaSamplesStayInUnitInterval) {
  Rng r(5);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double x = sample_beta(0.8, r);
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
  EXPECT_THROW(sample_beta(0.0, r), std::invalid_argument);
}
