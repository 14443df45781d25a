#pragma once

// Fixed-length frame chains sampled from annotated videos, the temporal
// augmentations applied to them, and the boundary-regression targets.

#include <random>
#include <utility>
#include <vector>

#include "signmix/manifest.hpp"

namespace signmix {

using Rng = std::mt19937_64;

struct ClipSpec {
  int length = 32;
  int step = 2;
  int margin = 5;  // frames of slack allowed around long signs
  int span() const noexcept { return (length - 1) * step + 1; }
};

struct BoundaryTargets {
  double start = 0.0;
  double end = 0.0;
  bool operator==(const BoundaryTargets&) const = default;
};

struct ClipSample {
  std::vector<int> frame_indices;
  int clip_start = 0;
  int clip_end = 0;  // clip_start + span
  BoundaryTargets boundary_targets;
};

// y = 2 sigmoid(x) - 1.
double squash(double x);

// Range of admissible clip starts [first, last] for a sign at least span() long.
std::pair<int, int> clip_start_range(const SampleRecord& rec, const ClipSpec& spec);

// Long signs: start uniform over clip_start_range. Short signs: start at the
// sign start, positions past the video end repeat the last frame.
ClipSample sample_clip(const SampleRecord& rec, const ClipSpec& spec, Rng& rng);

// Deterministic variant for evaluation: midpoint of the admissible range.
ClipSample center_clip(const SampleRecord& rec, const ClipSpec& spec);

ClipSample clip_at(const SampleRecord& rec, const ClipSpec& spec, int start);

// Sign boundaries relative to the clip, divided by the span, then squashed:
// start: (sign_start - clip_start) / span, end: (sign_end - clip_end) / span.
BoundaryTargets boundary_targets(const SampleRecord& rec, const ClipSample& clip, const ClipSpec& spec = {});

struct AugmentConfig {
  double p_speed = 0.25;  // each of speed-up and slow-down
  double p_drop = 0.5;
  double drop_frac = 0.10;
  double p_truncate = 0.25;
  double truncate_frac = 0.30;
};

// Speed change, then random drop, then truncation; output has the input's length.
std::vector<int> apply_temporal_augment(std::vector<int> indices, const AugmentConfig& cfg, Rng& rng);

// Building blocks, exposed for tests.
std::vector<int> speed_up(const std::vector<int>& indices);
std::vector<int> slow_down(const std::vector<int>& indices);
std::vector<int> drop_and_restretch(const std::vector<int>& indices, int drop, Rng& rng);
std::vector<int> truncate_and_restretch(const std::vector<int>& indices, int cut, Rng& rng);
// Re-inserts `extra` random repeats of kept positions.
std::vector<int> stretch_by_repeats(const std::vector<int>& indices, int extra, Rng& rng);

int rounded_count(double fraction, int n);

}  // namespace signmix
