#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "signmix/schedule.hpp"
#include "test_util.hpp"

using namespace signmix;

TEST(Schedule, DefaultBreakpoints) {
  TrainPlan p;
  EXPECT_EQ(p.total_steps(), 5000);
  EXPECT_NEAR(lr_at(p, 0), 8e-6, 1e-12);
  EXPECT_NEAR(lr_at(p, 500), 4.8e-3, 1e-12);
  EXPECT_NEAR(lr_at(p, 4000), 8e-5, 1e-12);
  for (std::int64_t s = 4000; s < 5000; ++s) EXPECT_EQ(lr_at(p, s), 8e-5);
  EXPECT_THROW(lr_at(p, 5000), std::out_of_range);
  EXPECT_THROW(lr_at(p, -1), std::out_of_range);
}

TEST(Schedule, SegmentsFollowTheirFormulas) {
  TrainPlan p;
  for (std::int64_t s = 0; s <= 500; ++s) {
    EXPECT_NEAR(lr_at(p, s), 8e-6 + (4.8e-3 - 8e-6) * static_cast<double>(s) / 500.0, 1e-15);
  }
  for (std::int64_t s = 500; s <= 4000; ++s) {
    double t = static_cast<double>(s - 500) / 3500.0;
    EXPECT_NEAR(lr_at(p, s), 8e-5 + (4.8e-3 - 8e-5) * 0.5 * (1 + std::cos(std::numbers::pi * t)), 1e-15);
  }
}

TEST(Schedule, MonotoneAfterWarmup) {
  TrainPlan p;
  for (std::int64_t s = 1; s <= 500; ++s) EXPECT_GT(lr_at(p, s), lr_at(p, s - 1));
  for (std::int64_t s = 501; s < 5000; ++s) EXPECT_LE(lr_at(p, s), lr_at(p, s - 1));
}

TEST(Schedule, HalfDatasetRescale) {
  TrainPlan base;
  auto p = rescale_plan(base, 0.5);
  EXPECT_DOUBLE_EQ(p.total_epochs, 100.0);
  EXPECT_DOUBLE_EQ(p.cosine_first_epoch(), 11.0);
  EXPECT_DOUBLE_EQ(p.cosine_last_epoch(), 80.0);
  EXPECT_LE(std::llabs(p.total_steps() - base.total_steps()), 1);
  EXPECT_NEAR(lr_at(p, p.warmup_end_step()), 4.8e-3, 1e-12);
  EXPECT_NEAR(lr_at(p, p.cosine_end_step()), 8e-5, 1e-12);
}

TEST(Schedule, RescalePreservesStepsForAwkwardFractions) {
  TrainPlan base;
  for (double f : {0.1, 0.3, 0.37, 0.77, 1.5, 3.0}) {
    EXPECT_LE(std::llabs(rescale_plan(base, f).total_steps() - base.total_steps()), 1) << f;
  }
  EXPECT_THROW(rescale_plan(base, 0.0), std::invalid_argument);
}

TEST(Schedule, FrozenPlanShape) {
  TrainPlan base;
  auto p = frozen_plan(base);
  EXPECT_DOUBLE_EQ(p.lr_peak, 8e-4);
  EXPECT_DOUBLE_EQ(p.total_epochs, 15.0);
  EXPECT_DOUBLE_EQ(p.warmup_end_epoch, 1.0);
  EXPECT_DOUBLE_EQ(p.cosine_end_epoch, 11.0);
  EXPECT_EQ(p.total_steps(), 1500);
}

TEST(Schedule, ValidationRejectsBadOrdering) {
  TrainPlan p;
  p.cosine_end_epoch = 60;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.warmup_end_epoch = 6;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.lr_init = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Schedule, ZeroWarmupStartsAtPeak) {
  TrainPlan p;
  p.warmup_end_epoch = 0;
  p.cosine_start_epoch = 0;
  EXPECT_EQ(lr_at(p, 0), p.lr_peak);
}

TEST(Schedule, PlanFileRoundTripAndCsv) {
  testutil::TempDir dir;
  auto p = rescale_plan(TrainPlan{}, 0.3);
  write_plan(p, dir / "plan");
  EXPECT_EQ(load_plan(dir / "plan"), p);
  dump_schedule_csv(TrainPlan{}, dir / "csv");
  auto text = testutil::read_text(dir / "csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5001);
  testutil::write_text(dir / "bad", "epochs = 3\n");
  EXPECT_THROW(load_plan(dir / "bad"), std::invalid_argument);
}
