#include "signmix/clip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace signmix {

// 2 sigmoid(x) - 1, written as tanh(x / 2) so that it is exactly odd in floating point
double squash(double x) { return std::tanh(0.5 * x); }

int rounded_count(double fraction, int n) {
  return static_cast<int>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

namespace {

void check_record(const SampleRecord& rec) {
  if (rec.video_length < 1) throw std::invalid_argument("video shorter than one frame: " + rec.sample_id);
  if (!(0 <= rec.sign_start && rec.sign_start < rec.sign_end && rec.sign_end <= rec.video_length)) {
    throw std::invalid_argument("sign boundaries out of range: " + rec.sample_id);
  }
}

bool is_long(const SampleRecord& rec, const ClipSpec& spec) { return rec.sign_end - rec.sign_start >= spec.span(); }

}  // namespace

std::pair<int, int> clip_start_range(const SampleRecord& rec, const ClipSpec& spec) {
  check_record(rec);
  if (!is_long(rec, spec)) return {rec.sign_start, rec.sign_start};
  int lo = std::max(0, rec.sign_start - spec.margin);
  int hi = std::min(rec.video_length, rec.sign_end + spec.margin) - spec.span();
  return {lo, hi};
}

ClipSample clip_at(const SampleRecord& rec, const ClipSpec& spec, int start) {
  check_record(rec);
  ClipSample clip;
  clip.clip_start = start;
  clip.clip_end = start + spec.span();
  clip.frame_indices.resize(static_cast<std::size_t>(spec.length));
  for (int i = 0; i < spec.length; ++i) {
    clip.frame_indices[static_cast<std::size_t>(i)] = std::min(start + i * spec.step, rec.video_length - 1);
  }
  clip.boundary_targets = boundary_targets(rec, clip, spec);
  return clip;
}

ClipSample sample_clip(const SampleRecord& rec, const ClipSpec& spec, Rng& rng) {
  auto [lo, hi] = clip_start_range(rec, spec);
  int start = lo;
  if (hi > lo) start = std::uniform_int_distribution<int>(lo, hi)(rng);
  return clip_at(rec, spec, start);
}

ClipSample center_clip(const SampleRecord& rec, const ClipSpec& spec) {
  auto [lo, hi] = clip_start_range(rec, spec);
  return clip_at(rec, spec, lo + (hi - lo) / 2);
}

BoundaryTargets boundary_targets(const SampleRecord& rec, const ClipSample& clip, const ClipSpec& spec) {
  const double span = spec.span();
  double raw_start = (rec.sign_start - clip.clip_start) / span;
  double raw_end = (rec.sign_end - clip.clip_end) / span;
  return {squash(raw_start), squash(raw_end)};
}

std::vector<int> speed_up(const std::vector<int>& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); i += 2) out.push_back(indices[i]);
  while (out.size() < indices.size()) out.push_back(indices.back());
  return out;
}

std::vector<int> slow_down(const std::vector<int>& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i = 0; out.size() < indices.size(); ++i) {
    out.push_back(indices[i]);
    if (out.size() < indices.size()) out.push_back(indices[i]);
  }
  return out;
}

std::vector<int> stretch_by_repeats(const std::vector<int>& indices, int extra, Rng& rng) {
  if (indices.empty() || extra <= 0) return indices;
  std::vector<int> copies(indices.size(), 1);
  std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
  for (int i = 0; i < extra; ++i) copies[pick(rng)] += 1;
  std::vector<int> out;
  out.reserve(indices.size() + static_cast<std::size_t>(extra));
  for (std::size_t i = 0; i < indices.size(); ++i) out.insert(out.end(), static_cast<std::size_t>(copies[i]), indices[i]);
  return out;
}

std::vector<int> drop_and_restretch(const std::vector<int>& indices, int drop, Rng& rng) {
  const auto n = indices.size();
  drop = std::clamp(drop, 0, static_cast<int>(n) - 1);
  if (drop == 0) return indices;
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  std::shuffle(positions.begin(), positions.end(), rng);
  std::vector<char> removed(n, 0);
  for (int i = 0; i < drop; ++i) removed[positions[static_cast<std::size_t>(i)]] = 1;
  std::vector<int> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!removed[i]) kept.push_back(indices[i]);
  }
  return stretch_by_repeats(kept, drop, rng);
}

std::vector<int> truncate_and_restretch(const std::vector<int>& indices, int cut, Rng& rng) {
  const auto n = static_cast<int>(indices.size());
  cut = std::clamp(cut, 0, n - 1);
  if (cut == 0) return indices;
  int keep = n - cut;
  int offset = std::uniform_int_distribution<int>(0, cut)(rng);
  std::vector<int> window(indices.begin() + offset, indices.begin() + offset + keep);
  return stretch_by_repeats(window, cut, rng);
}

std::vector<int> apply_temporal_augment(std::vector<int> indices, const AugmentConfig& cfg, Rng& rng) {
  if (indices.empty()) return indices;
  const int n = static_cast<int>(indices.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);

  double speed = u(rng);
  if (speed < cfg.p_speed) {
    indices = speed_up(indices);
  } else if (speed < 2.0 * cfg.p_speed) {
    indices = slow_down(indices);
  }
  if (u(rng) < cfg.p_drop) indices = drop_and_restretch(indices, rounded_count(cfg.drop_frac, n), rng);
  if (u(rng) < cfg.p_truncate) indices = truncate_and_restretch(indices, rounded_count(cfg.truncate_frac, n), rng);
  return indices;
}

}  // namespace signmix
