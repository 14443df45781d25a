#pragma once

// Synthetic multilingual sign datasets for desk-scale experiments.
//
// Every class is a prototype trajectory over normalised sign time: a static
// pose plus low-frequency sinusoidal motion per feature dimension. Language 0
// draws fresh prototypes; in every other language a shared_prototype_fraction
// of the classes reuse a perturbed language-0 prototype, the rest are fresh.
// A sample is its prototype over [sign_start, sign_end) plus a per-signer
// offset plus frame noise; frames outside the sign are a noisy rest pose.
// Signer offsets live in a low-rank subspace common to all languages, so
// invariance to them can be learned from one language and reused in another.

#include <cstdint>
#include <vector>

#include "signmix/features.hpp"
#include "signmix/manifest.hpp"

namespace signmix {

struct SyntheticSpec {
  int n_languages = 3;
  int classes_per_language = 10;
  double shared_prototype_fraction = 0.7;
  int samples_per_class = 12;
  int signers = 10;  // per language
  int feature_dim = 8;
  double noise_scale = 0.3;
  double pose_scale = 1.0;     // std of the static pose
  double motion_scale = 0.5;   // std of each sinusoid amplitude
  double signer_scale = 0.2;   // std of per-signer offsets along each basis direction
  int signer_rank = 2;         // dimension of the signer subspace
  double share_perturbation = 0.15;  // relative perturbation of reused prototypes
  int confusable_pairs = 0;          // planted per language; recorded as groups
  double confusable_distance = 0.1;  // relative perturbation inside a pair
  int min_sign_length = 30;
  int max_sign_length = 70;
  int max_padding = 12;  // rest frames before and after the sign, each
  double test_fraction = 0.2;  // 0: leave samples unassigned
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on counts < 1 or fractions outside [0, 1].
  void validate() const;
};

struct SyntheticData {
  std::vector<DatasetManifest> manifests;  // language i -> "lang<i>"
  FeatureStore features;
  // For languages >= 1: gloss -> reused language-0 gloss, or "" when fresh.
  std::vector<std::vector<std::pair<std::string, std::string>>> shared_with;
};

std::string synthetic_language(int index);

// Deterministic per spec. With test_fraction > 0 each manifest is split
// signer-disjointly by the split solver.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

}  // namespace signmix
