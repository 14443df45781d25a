#pragma once

// Language-tagged batches, the language gate that splits them into
// per-language sub-batches, and Mixup/CutMix inside a sub-batch.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "signmix/clip.hpp"
#include "signmix/manifest.hpp"

namespace signmix {

struct BatchItem {
  std::string sample_id;
  LanguageTag language;
  std::vector<double> features;  // frames x dim, row-major
  std::size_t label = 0;         // class index in the language's head
  std::vector<double> target;    // class distribution (one-hot unless mixed)
  BoundaryTargets boundary;      // squashed
  bool operator==(const BatchItem&) const = default;
};

BatchItem make_item(std::string sample_id, LanguageTag language, std::vector<double> features, std::size_t label,
                    std::size_t classes, BoundaryTargets boundary);

struct MixedBatch {
  std::vector<BatchItem> items;
  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
};

struct SubBatch {
  LanguageTag language;
  std::vector<BatchItem> items;
  std::vector<std::size_t> origin;  // position of each item in the mixed batch
};

// One sub-batch per language present, ordered by `languages`; within-language
// order preserved. Throws std::invalid_argument for a tag not in `languages`.
std::vector<SubBatch> gate_split(const MixedBatch& batch, const std::vector<LanguageTag>& languages);

// Inverse of gate_split: every item returns to its origin position.
MixedBatch merge_sub_batches(std::vector<SubBatch> subs);

// n_lang / N for every language present in the batch.
std::map<LanguageTag, double> language_weights(const MixedBatch& batch);

enum class MixMode { mixup, cutmix };

// Items are paired with their mirror (i <-> n-1-i). Mixup: convex combination
// with weight lambda on the item itself. CutMix: a contiguous run of
// round((1 - lambda) * frames) frames is copied from the partner, labels
// mixed by the copied fraction. Sub-batches of one item are returned unchanged.
SubBatch mix_with_lambda(SubBatch sub, MixMode mode, double lambda, std::size_t frames, Rng& rng);

// lambda ~ Beta(alpha, alpha).
double sample_beta(double alpha, Rng& rng);
SubBatch intersample_augment(SubBatch sub, MixMode mode, double alpha, std::size_t frames, Rng& rng);

struct MixConfig {
  bool enabled = true;
  double probability = 0.5;  // per sub-batch
  double alpha = 0.8;
  double cutmix_share = 0.5;  // chance of CutMix when mixing
};

// Applies the configured mixing to one sub-batch.
SubBatch maybe_mix(SubBatch sub, const MixConfig& cfg, std::size_t frames, Rng& rng);

}  // namespace signmix
