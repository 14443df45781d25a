#pragma once

// Batch loss/gradient and inference kernels. Per-item work runs under OpenMP
// (Exec::parallel) or in a plain loop (Exec::serial); per-item results are
// always reduced serially in item order, so both modes agree bit for bit.
//
// Objective for a batch of N items:
//   L = sum_lang w_lang * L_cls,lang + regression_weight * L_regr
//   w_lang = n_lang / N
//   L_cls,lang = mean label-smoothed cross-entropy over the language's items
//   L_regr = mean squared error between squash(regression output) and the
//            squashed boundary targets, averaged over items and both outputs

#include <span>
#include <vector>

#include "signmix/batch.hpp"
#include "signmix/model.hpp"

namespace signmix {

enum class Exec { serial, parallel };

struct LossOptions {
  double label_smoothing = 0.1;
  double regression_weight = 2.5;
  bool regression = true;
  std::vector<LanguageTag> regression_languages;  // empty: every language
  bool encoder_gradient = true;                   // false for a frozen encoder
};

struct LossReport {
  std::vector<LanguageTag> languages;  // model head order
  std::vector<double> cls;             // per head, 0 when absent from the batch
  std::vector<double> weights;         // per head, 0 when absent
  std::vector<std::size_t> counts;
  double regression = 0.0;
  double total = 0.0;
};

// Routes every item to its language's head. If `grad` is non-empty it is
// overwritten with dL/dparams.
LossReport cotrain_loss(const Model& model, const MixedBatch& batch, const LossOptions& opt, std::span<double> grad,
                        Exec exec = Exec::parallel);

// Single-dataset pipeline: every item is scored by head `head`, no gate.
LossReport plain_loss(const Model& model, const MixedBatch& batch, std::size_t head, const LossOptions& opt,
                      std::span<double> grad, Exec exec = Exec::parallel);

// Label-smoothed cross-entropy of logits against a target distribution.
double smoothed_cross_entropy(std::span<const double> logits, std::span<const double> target, double epsilon);

std::vector<double> embed(const Model& model, std::span<const double> features);
std::vector<double> head_logits(const Model& model, std::size_t head, std::span<const double> embedding);

// Argmax class (ties to the lower index) of each feature sequence.
std::vector<std::size_t> predict(const Model& model, std::size_t head,
                                 const std::vector<std::vector<double>>& features, Exec exec = Exec::parallel);

std::vector<std::vector<double>> embed_all(const Model& model, const std::vector<std::vector<double>>& features,
                                           Exec exec = Exec::parallel);

}  // namespace signmix
