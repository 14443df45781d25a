#pragma once

// Named experiment scenarios over synthetic or on-disk data. Every
// single-dataset run gets the same number of optimiser steps (train.steps),
// co-training runs get train.cotrain_steps (default: train.steps per
// language); breakpoints of the base plan are rescaled to each run's size.
//
// Scenarios:
//   baseline              scratch training on the target language
//   transfer-frozen       source-pretrained encoder frozen, target head trained
//   transfer-full         source-pretrained encoder fine-tuned on the target
//   cotrain               all languages co-trained from the source model
//   label-map             source classifier with labels mapped to the target
//   kshot                 baseline and transfer-full for each k in kshot_values
//   grouped-vs-ungrouped  target trained on gloss vs group labels, grouped metrics

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "signmix/config.hpp"
#include "signmix/synth.hpp"
#include "signmix/trainer.hpp"

namespace signmix {

const std::vector<std::string>& scenario_names();

struct ExperimentConfig {
  std::vector<std::string> scenarios;
  std::uint64_t seed = 0;
  bool synthetic = true;
  SyntheticSpec synth;
  std::vector<std::filesystem::path> manifests;
  std::filesystem::path features;
  std::string target = "lang1";
  std::string source = "lang0";
  int kshot = 0;  // 0: full target train set
  std::vector<int> kshot_values{1, 3, 10};
  std::int64_t steps = 300;
  std::int64_t cotrain_steps = 0;  // 0: steps * languages
  TrainerConfig train;
  double frozen_peak = 8e-4;
  std::string config_hash;
};

// Applies "train.*", "augment.*", "optimizer.*" and "plan.*" keys on top of
// `base`; unknown keys in those sections throw. Other keys are ignored.
TrainerConfig trainer_config_from(const Config& c, TrainerConfig base = {});

// Throws std::invalid_argument on unknown keys or scenarios.
ExperimentConfig experiment_config(const Config& c);

// Plan with the same shape as `base` that runs exactly `steps` optimiser
// steps at `steps_per_epoch`.
TrainPlan fit_plan_to_steps(const TrainPlan& base, std::size_t steps_per_epoch, std::int64_t steps);

struct ReportRow {
  std::string scenario;
  std::string method;
  std::string language;
  int kshot = 0;
  double accuracy = 0.0;
  std::optional<double> non_vssign;
  std::optional<double> vssign;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::int64_t steps = 0;
  std::string config_hash;
  std::string test_set_hash;
};

struct Report {
  std::vector<ReportRow> rows;
  const ReportRow* find(const std::string& scenario, const std::string& method, const std::string& language = "",
                        int kshot = -1) const;
};

Record row_record(const ReportRow& row);
std::string format_table(const Report& report);

// FNV-1a over the sorted test sample ids.
std::string test_set_hash(const DatasetManifest& m);

Report run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);
Report run_experiment(const std::filesystem::path& config_path, std::ostream* log = nullptr);

}  // namespace signmix
