#pragma once

// Piecewise learning-rate schedule: linear warm-up, cosine annealing,
// constant tail. Epoch breakpoints are continuous (0-based) epoch positions;
// "cosine over epochs 6 to 40" with a 5-epoch warm-up is cosine_start = 5,
// cosine_end = 40.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace signmix {

struct TrainPlan {
  double total_epochs = 50.0;
  double warmup_end_epoch = 5.0;
  double cosine_start_epoch = 5.0;
  double cosine_end_epoch = 40.0;
  double lr_init = 8e-6;
  double lr_peak = 4.8e-3;
  double lr_final = 8e-5;
  double steps_per_epoch = 100.0;
  double scale_factor = 1.0;  // dataset fraction this plan was rescaled by

  // Throws std::invalid_argument on violated ordering constraints.
  void validate() const;

  std::int64_t total_steps() const;
  std::int64_t warmup_end_step() const;
  std::int64_t cosine_start_step() const;
  std::int64_t cosine_end_step() const;

  // 1-based epoch numbers of the cosine segment, as usually reported.
  double cosine_first_epoch() const { return cosine_start_epoch + 1.0; }
  double cosine_last_epoch() const { return cosine_end_epoch; }

  bool operator==(const TrainPlan&) const = default;
};

// Half-up rounding of an epoch position to a step index.
std::int64_t epoch_to_step(double epoch, double steps_per_epoch);

// Throws std::out_of_range unless 0 <= step < total_steps().
double lr_at(const TrainPlan& plan, std::int64_t step);

// Same number of optimiser steps on a dataset `fraction` times the size:
// epochs and breakpoints scaled by 1/fraction, steps per epoch by fraction.
TrainPlan rescale_plan(const TrainPlan& base, double fraction);

// Frozen-encoder plan: 30% of the base steps, warm-up 5x shorter, cosine 3.5x
// shorter, peak lowered to `peak`.
TrainPlan frozen_plan(const TrainPlan& base, double peak = 8e-4);

TrainPlan load_plan(const std::filesystem::path& path);
void write_plan(const TrainPlan& plan, const std::filesystem::path& path);
std::string plan_text(const TrainPlan& plan);

void dump_schedule_csv(const TrainPlan& plan, const std::filesystem::path& path);

}  // namespace signmix
