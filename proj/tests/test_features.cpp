#include <gtest/gtest.h>

#include "signmix/features.hpp"
#include "signmix/record.hpp"
#include "test_util.hpp"

using namespace signmix;

namespace {
FeatureStore sample_store() {
  FeatureStore s(2);
  s.add("b", std::vector<double>{1, 2, 3, 4, 5, 6});
  s.add("a", std::vector<double>{-1, -2});
  return s;
}
}  // namespace

TEST(Features, AddAndGather) {
  auto s = sample_store();
  EXPECT_EQ(s.frame_count("b"), 3u);
  std::vector<int> idx{2, 0, 2};
  std::vector<double> out(6);
  s.gather("b", idx, out);
  EXPECT_EQ(out, (std::vector<double>{5, 6, 1, 2, 5, 6}));
  EXPECT_THROW(s.gather("b", std::vector<int>{3}, std::span<double>(out.data(), 2)), std::out_of_range);
  EXPECT_THROW(s.frames("zz"), std::out_of_range);
}

TEST(Features, RejectsBadBlocks) {
  FeatureStore s(2);
  EXPECT_THROW(s.add("x", std::vector<double>{1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(s.add("x", std::vector<double>{}), std::invalid_argument);
  s.add("x", std::vector<double>{1, 2});
  EXPECT_THROW(s.add("x", std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Features, SaveLoadRoundTrip) {
  testutil::TempDir dir;
  auto s = sample_store();
  s.save(dir / "f");
  auto back = FeatureStore::load(dir / "f");
  EXPECT_EQ(back.dim(), 2u);
  EXPECT_EQ(back.sample_ids(), (std::vector<std::string>{"a", "b"}));
  auto f = back.frames("b");
  EXPECT_EQ(std::vector<double>(f.begin(), f.end()), (std::vector<double>{1, 2, 3, 4, 5, 6}));
}

TEST(Features, TruncatedBinaryIsDetected) {
  testutil::TempDir dir;
  sample_store().save(dir / "f");
  std::filesystem::resize_file(dir / "f.bin", 8);
  EXPECT_THROW(FeatureStore::load(dir / "f"), IoError);
}

TEST(Features, MergeChecksDimension) {
  auto s = sample_store();
  FeatureStore other(2);
  other.add("c", std::vector<double>{0, 0});
  s.merge(other);
  EXPECT_TRUE(s.contains("c"));
  FeatureStore wrong(3);
  EXPECT_THROW(s.merge(wrong), std::invalid_argument);
}
