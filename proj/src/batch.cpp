#include "signmix/batch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace signmix {

BatchItem make_item(std::string sample_id, LanguageTag language, std::vector<double> features, std::size_t label,
                    std::size_t classes, BoundaryTargets boundary) {
  if (label >= classes) throw std::invalid_argument("label outside the head's classes");
  BatchItem item;
  item.sample_id = std::move(sample_id);
  item.language = std::move(language);
  item.features = std::move(features);
  item.label = label;
  item.target.assign(classes, 0.0);
  item.target[label] = 1.0;
  item.boundary = boundary;
  return item;
}

std::vector<SubBatch> gate_split(const MixedBatch& batch, const std::vector<LanguageTag>& languages) {
  std::vector<SubBatch> subs(languages.size());
  for (std::size_t l = 0; l < languages.size(); ++l) subs[l].language = languages[l];
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    const auto& item = batch.items[i];
    auto it = std::find(languages.begin(), languages.end(), item.language);
    if (it == languages.end()) throw std::invalid_argument("unknown language tag '" + item.language.code + "'");
    auto& sub = subs[static_cast<std::size_t>(it - languages.begin())];
    sub.items.push_back(item);
    sub.origin.push_back(i);
  }
  std::erase_if(subs, [](const SubBatch& s) { return s.items.empty(); });
  return subs;
}

MixedBatch merge_sub_batches(std::vector<SubBatch> subs) {
  std::size_t n = 0;
  for (const auto& s : subs) n += s.items.size();
  MixedBatch out;
  out.items.resize(n);
  std::vector<char> filled(n, 0);
  for (auto& s : subs) {
    if (s.origin.size() != s.items.size()) throw std::invalid_argument("sub-batch origin list is inconsistent");
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      auto pos = s.origin[i];
      if (pos >= n || filled[pos]) throw std::invalid_argument("sub-batch origins overlap");
      filled[pos] = 1;
      out.items[pos] = std::move(s.items[i]);
    }
  }
  return out;
}

std::map<LanguageTag, double> language_weights(const MixedBatch& batch) {
  std::map<LanguageTag, double> counts;
  for (const auto& item : batch.items) counts[item.language] += 1.0;
  const double total = static_cast<double>(batch.items.size());
  for (auto& [lang, c] : counts) c /= total;
  return counts;
}

double sample_beta(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("beta parameter must be positive");
  std::gamma_distribution<double> g(alpha, 1.0);
  double x = g(rng), y = g(rng);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

SubBatch mix_with_lambda(SubBatch sub, MixMode mode, double lambda, std::size_t frames, Rng& rng) {
  const auto n = sub.items.size();
  if (n < 2) return sub;
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  const auto original = sub.items;
  const auto& first = original.front();
  if (frames == 0 || first.features.size() % frames != 0) throw std::invalid_argument("feature length not a multiple of frames");
  const auto dim = first.features.size() / frames;

  double keep = lambda;
  std::size_t cut_begin = 0, cut_len = 0;
  if (mode == MixMode::cutmix) {
    cut_len = static_cast<std::size_t>(std::floor((1.0 - lambda) * static_cast<double>(frames) + 0.5));
    cut_len = std::min(cut_len, frames);
    if (cut_len > 0 && cut_len < frames) {
      cut_begin = std::uniform_int_distribution<std::size_t>(0, frames - cut_len)(rng);
    }
    keep = 1.0 - static_cast<double>(cut_len) / static_cast<double>(frames);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& self = original[i];
    const auto& other = original[n - 1 - i];
    if (other.features.size() != self.features.size() || other.target.size() != self.target.size()) {
      throw std::invalid_argument("sub-batch items have inconsistent shapes");
    }
    auto& out = sub.items[i];
    if (mode == MixMode::mixup) {
      for (std::size_t k = 0; k < self.features.size(); ++k) {
        out.features[k] = lambda * self.features[k] + (1.0 - lambda) * other.features[k];
      }
    } else {
      for (std::size_t t = cut_begin; t < cut_begin + cut_len; ++t) {
        std::copy_n(other.features.begin() + static_cast<std::ptrdiff_t>(t * dim), dim,
                    out.features.begin() + static_cast<std::ptrdiff_t>(t * dim));
      }
    }
    for (std::size_t c = 0; c < self.target.size(); ++c) {
      out.target[c] = keep * self.target[c] + (1.0 - keep) * other.target[c];
    }
    out.boundary.start = keep * self.boundary.start + (1.0 - keep) * other.boundary.start;
    out.boundary.end = keep * self.boundary.end + (1.0 - keep) * other.boundary.end;
  }
  return sub;
}

SubBatch intersample_augment(SubBatch sub, MixMode mode, double alpha, std::size_t frames, Rng& rng) {
  if (sub.items.size() < 2) return sub;
  double lambda = sample_beta(alpha, rng);
  return mix_with_lambda(std::move(sub), mode, lambda, frames, rng);
}

SubBatch maybe_mix(SubBatch sub, const MixConfig& cfg, std::size_t frames, Rng& rng) {
  if (!cfg.enabled || sub.items.size() < 2) return sub;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) >= cfg.probability) return sub;
  auto mode = u(rng) < cfg.cutmix_share ? MixMode::cutmix : MixMode::mixup;
  return intersample_augment(std::move(sub), mode, cfg.alpha, frames, rng);
}

}  // namespace signmix
