#pragma once

// Training loops. train() is the co-training engine: mixed-language batches,
// language gate, per-sub-batch mixing, one head per language. train_single()
// is the plain single-dataset pipeline kept as an independent reference path.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "signmix/batch.hpp"
#include "signmix/features.hpp"
#include "signmix/kernels.hpp"
#include "signmix/manifest.hpp"
#include "signmix/model.hpp"
#include "signmix/optimizer.hpp"
#include "signmix/schedule.hpp"

namespace signmix {

// One language's split data with class indices resolved.
struct LanguageData {
  LanguageTag language;
  LabelSpace space;
  std::vector<SampleRecord> train, test;
  std::vector<std::size_t> train_labels, test_labels;
  const FeatureStore* store = nullptr;
};

// Throws std::invalid_argument if a train/test sample has no features.
LanguageData prepare_language(const DatasetManifest& m, const FeatureStore& store, LabelMode mode = LabelMode::gloss);

enum class EncoderMode { scratch, pretrained, frozen };
EncoderMode encoder_mode_from_string(const std::string& s);
const char* to_string(EncoderMode m);

struct TrainerConfig {
  TrainPlan plan;
  std::size_t batch_size = 16;
  EncoderMode mode = EncoderMode::scratch;
  std::uint64_t seed = 0;
  ClipSpec clip;
  bool augment = true;
  AugmentConfig augment_cfg;
  MixConfig mix;
  LossOptions loss;
  AdamWConfig optimizer;
  Exec exec = Exec::parallel;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 64;
  bool evaluate_each_epoch = true;
};

struct EpochMetrics {
  int epoch = 0;          // 1-based
  std::int64_t step = 0;  // global steps completed
  double lr = 0.0;        // rate used by the last step
  std::vector<LanguageTag> languages;
  std::vector<double> loss;      // mean classification loss per language over the epoch
  std::vector<double> accuracy;  // test top-1 per language, NaN when not evaluated
};

Record metrics_record(const EpochMetrics& m);

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> metrics;
};

// Fresh model whose heads follow `data` order and whose encoder matches the config.
Model make_model(const std::vector<LanguageData>& data, const TrainerConfig& cfg);

// Steps per epoch derived from the training data: ceil(train samples / batch).
std::size_t steps_per_epoch(const std::vector<LanguageData>& data, std::size_t batch_size);

// `init` is required for pretrained and frozen modes: its encoder weights and
// any heads with matching language and labels are copied. A non-finite loss
// throws std::runtime_error naming the step and samples.
TrainResult train(const std::vector<LanguageData>& data, const TrainerConfig& cfg, const Model* init = nullptr,
                  std::ostream* log = nullptr);

TrainResult train_single(const LanguageData& data, const TrainerConfig& cfg, const Model* init = nullptr,
                         std::ostream* log = nullptr);

// Center-clip features of a sample, frames x dim.
std::vector<double> clip_features(const FeatureStore& store, const SampleRecord& rec, const ClipSpec& clip);

// Predictions of head `head` on the given samples (center clips).
std::vector<std::size_t> predict_samples(const Model& model, std::size_t head, const std::vector<SampleRecord>& samples,
                                         const FeatureStore& store, const ClipSpec& clip, Exec exec = Exec::parallel);

double accuracy_of(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth);

}  // namespace signmix
