#include "signmix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "signmix/clip.hpp"
#include "signmix/split.hpp"

namespace signmix {

void SyntheticSpec::validate() const {
  if (n_languages < 1 || classes_per_language < 1 || samples_per_class < 1 || signers < 1 || feature_dim < 1) {
    throw std::invalid_argument("synthetic counts must be at least 1");
  }
  if (!(shared_prototype_fraction >= 0.0 && shared_prototype_fraction <= 1.0)) {
    throw std::invalid_argument("shared_prototype_fraction must lie in [0, 1]");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in [0, 1)");
  if (signer_rank < 0 || signer_rank > feature_dim) throw std::invalid_argument("signer_rank outside [0, feature_dim]");
  if (noise_scale < 0.0 || signer_scale < 0.0 || pose_scale < 0.0 || motion_scale < 0.0 || share_perturbation < 0.0 || confusable_distance < 0.0) {
    throw std::invalid_argument("scales must be non-negative");
  }
  if (min_sign_length < 2 || max_sign_length < min_sign_length || max_padding < 0) {
    throw std::invalid_argument("invalid sign length range");
  }
  if (2 * confusable_pairs > classes_per_language) throw std::invalid_argument("too many confusable pairs");
  if (test_fraction > 0.0 && signers < 2) throw std::invalid_argument("a split needs at least two signers");
}

std::string synthetic_language(int index) { return "lang" + std::to_string(index); }

namespace {

constexpr int kHarmonics = 3;

// static pose per dimension; amplitude and phase per (dimension, harmonic)
struct Prototype {
  std::vector<double> pose, amp, phase;
};

Prototype fresh_prototype(const SyntheticSpec& spec, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  Prototype p;
  for (int d = 0; d < spec.feature_dim; ++d) p.pose.push_back(spec.pose_scale * n(rng));
  for (int i = 0; i < spec.feature_dim * kHarmonics; ++i) {
    p.amp.push_back(spec.motion_scale * n(rng));
    p.phase.push_back(u(rng));
  }
  return p;
}

// Relative perturbation: pose and amplitudes move by `scale` times their std.
Prototype perturbed(const Prototype& base, const SyntheticSpec& spec, double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Prototype p = base;
  for (auto& x : p.pose) x += scale * spec.pose_scale * n(rng);
  for (auto& a : p.amp) a += scale * spec.motion_scale * n(rng);
  for (auto& f : p.phase) f += scale * n(rng);
  return p;
}

double evaluate(const Prototype& p, int d, double u) {
  double v = p.pose[static_cast<std::size_t>(d)];
  for (int k = 0; k < kHarmonics; ++k) {
    auto i = static_cast<std::size_t>(d * kHarmonics + k);
    v += p.amp[i] * std::sin(std::numbers::pi * (k + 1) * u + p.phase[i]);
  }
  return v;
}

std::string padded(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
  return buf;
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticData out;
  out.features = FeatureStore(static_cast<std::size_t>(spec.feature_dim));
  const int dim = spec.feature_dim;
  std::normal_distribution<double> unit(0.0, 1.0);

  // orthonormal signer basis shared by every language (Gram-Schmidt)
  std::vector<std::vector<double>> basis;
  while (static_cast<int>(basis.size()) < spec.signer_rank) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = unit(rng);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += v[static_cast<std::size_t>(d)] * b[static_cast<std::size_t>(d)];
      for (int d = 0; d < dim; ++d) v[static_cast<std::size_t>(d)] -= dot * b[static_cast<std::size_t>(d)];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }

  std::vector<Prototype> source_protos;
  for (int l = 0; l < spec.n_languages; ++l) {
    const std::string code = synthetic_language(l);
    DatasetManifest m;
    m.language = LanguageTag{code};

    // class prototypes
    std::vector<Prototype> protos;
    std::vector<std::pair<std::string, std::string>> shared;
    const int n_shared = l == 0 ? 0
                                : static_cast<int>(std::floor(spec.shared_prototype_fraction *
                                                                  spec.classes_per_language + 0.5));
    std::vector<int> reuse(static_cast<std::size_t>(spec.classes_per_language));
    std::iota(reuse.begin(), reuse.end(), 0);
    std::shuffle(reuse.begin(), reuse.end(), rng);
    for (int c = 0; c < spec.classes_per_language; ++c) {
      const auto gloss = code + "_" + padded("g", c);
      if (c < n_shared) {
        const int src = reuse[static_cast<std::size_t>(c)];
        protos.push_back(perturbed(source_protos[static_cast<std::size_t>(src)], spec, spec.share_perturbation, rng));
        shared.emplace_back(gloss, synthetic_language(0) + "_" + padded("g", src));
      } else {
        protos.push_back(fresh_prototype(spec, rng));
        shared.emplace_back(gloss, "");
      }
      m.glosses.push_back({gloss, m.language});
    }
    // planted confusable pairs: class 2i+1 becomes a near copy of class 2i
    for (int i = 0; i < spec.confusable_pairs; ++i) {
      protos[static_cast<std::size_t>(2 * i + 1)] =
          perturbed(protos[static_cast<std::size_t>(2 * i)], spec, spec.confusable_distance, rng);
    }
    if (spec.confusable_pairs > 0) {
      for (int c = 0; c < spec.classes_per_language; ++c) {
        const auto& g = m.glosses[static_cast<std::size_t>(c)].id;
        if (c < 2 * spec.confusable_pairs) {
          if (c % 2 == 0) m.groups.push_back({g, {g, m.glosses[static_cast<std::size_t>(c + 1)].id}});
        } else {
          m.groups.push_back({g, {g}});
        }
      }
    }
    if (l == 0) source_protos = protos;
    out.shared_with.push_back(std::move(shared));

    std::vector<std::vector<double>> offsets;
    for (int s = 0; s < spec.signers; ++s) {
      m.signers.push_back({code + "_" + padded("s", s)});
      std::vector<double> off(static_cast<std::size_t>(dim), 0.0);
      for (const auto& b : basis) {
        const double z = spec.signer_scale * unit(rng);
        for (int d = 0; d < dim; ++d) off[static_cast<std::size_t>(d)] += z * b[static_cast<std::size_t>(d)];
      }
      offsets.push_back(std::move(off));
    }

    std::uniform_int_distribution<int> pick_signer(0, spec.signers - 1);
    std::uniform_int_distribution<int> sign_len(spec.min_sign_length, spec.max_sign_length);
    std::uniform_int_distribution<int> pad(0, spec.max_padding);
    int serial = 0;
    for (int c = 0; c < spec.classes_per_language; ++c) {
      for (int i = 0; i < spec.samples_per_class; ++i) {
        SampleRecord rec;
        rec.sample_id = code + "_" + padded("x", serial++);
        const int s = pick_signer(rng);
        rec.signer = m.signers[static_cast<std::size_t>(s)];
        rec.gloss = m.glosses[static_cast<std::size_t>(c)].id;
        rec.language = m.language;
        const int len = sign_len(rng);
        rec.sign_start = pad(rng);
        rec.sign_end = rec.sign_start + len;
        rec.video_length = rec.sign_end + pad(rng);

        std::vector<double> frames(static_cast<std::size_t>(rec.video_length * dim));
        for (int t = 0; t < rec.video_length; ++t) {
          const bool inside = t >= rec.sign_start && t < rec.sign_end;
          const double u = (t - rec.sign_start + 0.5) / len;
          for (int d = 0; d < dim; ++d) {
            double v = inside ? evaluate(protos[static_cast<std::size_t>(c)], d, u) : 0.0;
            v += offsets[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)] + spec.noise_scale * unit(rng);
            frames[static_cast<std::size_t>(t * dim + d)] = v;
          }
        }
        out.features.add(rec.sample_id, frames);
        m.samples.push_back(std::move(rec));
      }
    }

    if (spec.test_fraction > 0.0) {
      SplitConfig cfg;
      cfg.p = spec.test_fraction;
      cfg.seed = spec.seed + static_cast<std::uint64_t>(l);
      cfg.restarts = 4;
      cfg.parallel = false;
      m = optimize_split(m, cfg).manifest;
    }
    m.validate();
    out.manifests.push_back(std::move(m));
  }
  return out;
}

}  // namespace signmix
