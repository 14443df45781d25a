#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "signmix/kernels.hpp"

using namespace signmix;

namespace {

constexpr std::size_t kFrames = 4, kDim = 3;

Model tiny_model(std::mt19937_64& rng, std::vector<std::size_t> classes = {3, 4, 5}) {
  std::vector<HeadSpec> heads;
  const char* names[] = {"a", "b", "c"};
  for (std::size_t h = 0; h < classes.size(); ++h) {
    HeadSpec s{{names[h]}, {}};
    for (std::size_t c = 0; c < classes[h]; ++c) s.labels.push_back("l" + std::to_string(c));
    heads.push_back(s);
  }
  Model m(std::make_shared<MlpEncoder>(kFrames, kDim, 5, 4), heads);
  std::normal_distribution<double> nd(0.0, 0.6);
  for (auto& p : m.params()) p = nd(rng);
  return m;
}

MixedBatch tiny_batch(std::mt19937_64& rng, std::size_t n, std::size_t langs = 3) {
  std::vector<std::string> names{"a", "b", "c"};
  std::vector<std::size_t> classes{3, 4, 5};
  names.resize(langs);
  classes.resize(langs);
  return oracle::random_batch(rng, names, classes, n, kFrames, kDim);
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

}  // namespace

TEST(Kernels, SmoothedCrossEntropyLimits) {
  std::vector<double> z{0, 0, 0, 0}, t{0, 1, 0, 0};
  EXPECT_NEAR(smoothed_cross_entropy(z, t, 0.1), std::log(4.0), 1e-15);
  std::vector<double> confident{-1e3, 1e3, -1e3, -1e3};
  EXPECT_NEAR(smoothed_cross_entropy(confident, t, 0.0), 0.0, 1e-12);
  EXPECT_GT(smoothed_cross_entropy(confident, t, 0.1), 100.0);  // smoothing penalises overconfidence
}

TEST(Kernels, ZeroModelGivesLogClasses) {
  std::mt19937_64 rng(1);
  auto m = tiny_model(rng);
  std::fill(m.params().begin(), m.params().end(), 0.0);
  auto b = tiny_batch(rng, 12);
  auto rep = cotrain_loss(m, b, LossOptions{}, {}, Exec::serial);
  const double log_c[] = {std::log(3.0), std::log(4.0), std::log(5.0)};
  double expect_cls = 0.0, sq = 0.0;
  for (std::size_t h = 0; h < 3; ++h) {
    if (rep.counts[h]) EXPECT_NEAR(rep.cls[h], log_c[h], 1e-12);
    expect_cls += rep.weights[h] * log_c[h];
  }
  for (const auto& it : b.items) sq += it.boundary.start * it.boundary.start + it.boundary.end * it.boundary.end;
  EXPECT_NEAR(rep.regression, sq / (2.0 * 12), 1e-12);
  EXPECT_NEAR(rep.total, expect_cls + 2.5 * rep.regression, 1e-12);
}

TEST(Kernels, LossMatchesScalarReference) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = tiny_model(rng);
    auto b = tiny_batch(rng, 1 + rng() % 8);
    LossOptions opt;
    opt.label_smoothing = trial % 3 ? 0.1 : 0.0;
    auto rep = cotrain_loss(m, b, opt, {}, Exec::serial);
    auto ref = oracle::scalar_loss(m, b, opt.label_smoothing, 2.5);
    EXPECT_NEAR(rep.total, ref.total, 1e-10);
    EXPECT_NEAR(rep.regression, ref.regression, 1e-10);
    double wsum = 0.0;
    for (std::size_t h = 0; h < 3; ++h) {
      wsum += rep.weights[h];
      auto it = ref.cls.find(rep.languages[h].code);
      if (it != ref.cls.end()) EXPECT_NEAR(rep.cls[h], it->second, 1e-10);
    }
    EXPECT_NEAR(wsum, 1.0, 1e-12);
  }
}

TEST(Kernels, SerialAndParallelAreBitIdentical) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = tiny_model(rng);
    auto b = tiny_batch(rng, 32);
    std::vector<double> gs(m.param_count()), gp(m.param_count());
    auto rs = cotrain_loss(m, b, LossOptions{}, gs, Exec::serial);
    auto rp = cotrain_loss(m, b, LossOptions{}, gp, Exec::parallel);
    EXPECT_EQ(rs.total, rp.total);
    EXPECT_EQ(gs, gp);
  }
}

TEST(Kernels, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = tiny_model(rng);
    auto b = tiny_batch(rng, 5);
    LossOptions opt;
    std::vector<double> grad(m.param_count());
    cotrain_loss(m, b, opt, grad, Exec::serial);
    Model probe = m;
    auto numeric = oracle::central_differences(
        std::vector<double>(m.params().begin(), m.params().end()), [&](const std::vector<double>& x) {
          std::copy(x.begin(), x.end(), probe.params().begin());
          return oracle::scalar_loss(probe, b, opt.label_smoothing, opt.regression_weight).total;
        });
    EXPECT_LT(rel_error(grad, numeric), 1e-6);
  }
}

TEST(Kernels, FrozenEncoderGetsNoGradient) {
  std::mt19937_64 rng(5);
  auto m = tiny_model(rng);
  auto b = tiny_batch(rng, 6);
  LossOptions opt;
  opt.encoder_gradient = false;
  std::vector<double> g(m.param_count(), 1.0);
  cotrain_loss(m, b, opt, g, Exec::serial);
  for (std::size_t i = 0; i < m.encoder_param_count(); ++i) EXPECT_EQ(g[i], 0.0);
  std::vector<double> full(m.param_count());
  cotrain_loss(m, b, LossOptions{}, full, Exec::serial);
  for (std::size_t i = m.encoder_param_count(); i < g.size(); ++i) EXPECT_EQ(g[i], full[i]);
}

TEST(Kernels, AbsentHeadsGetZeroGradient) {
  std::mt19937_64 rng(6);
  auto m = tiny_model(rng);
  auto b = tiny_batch(rng, 6, 1);  // only language a
  std::vector<double> g(m.param_count());
  auto rep = cotrain_loss(m, b, LossOptions{}, g, Exec::serial);
  EXPECT_EQ(rep.weights[0], 1.0);
  EXPECT_EQ(rep.counts[1], 0u);
  for (std::size_t h = 1; h < 3; ++h) {
    for (std::size_t i = 0; i < m.head_param_count(h); ++i) EXPECT_EQ(g[m.head_weight_offset(h) + i], 0.0);
  }
}

TEST(Kernels, SingleLanguageCotrainEqualsPlainLoss) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = tiny_model(rng, {3});
    auto b = tiny_batch(rng, 9, 1);
    std::vector<double> g1(m.param_count()), g2(m.param_count());
    auto a = cotrain_loss(m, b, LossOptions{}, g1, Exec::serial);
    auto p = plain_loss(m, b, 0, LossOptions{}, g2, Exec::serial);
    EXPECT_NEAR(a.total, p.total, 1e-10);
    EXPECT_LT(rel_error(g1, g2), 1e-12);
  }
}

TEST(Kernels, RegressionCanBeRestrictedOrDisabled) {
  std::mt19937_64 rng(8);
  auto m = tiny_model(rng);
  auto b = tiny_batch(rng, 10);
  LossOptions off;
  off.regression = false;
  auto rep = cotrain_loss(m, b, off, {}, Exec::serial);
  EXPECT_EQ(rep.regression, 0.0);
  EXPECT_NEAR(rep.total, oracle::scalar_loss(m, b, 0.1, 2.5, false).total, 1e-10);
  LossOptions only_a;
  only_a.regression_languages = {{"a"}};
  MixedBatch just_a;
  for (const auto& it : b.items) {
    if (it.language.code == "a") just_a.items.push_back(it);
  }
  auto restricted = cotrain_loss(m, b, only_a, {}, Exec::serial);
  if (!just_a.empty()) {
    EXPECT_NEAR(restricted.regression, cotrain_loss(m, just_a, LossOptions{}, {}, Exec::serial).regression, 1e-12);
  }
}

TEST(Kernels, PredictIsArgmaxOfLogits) {
  std::mt19937_64 rng(9);
  auto m = tiny_model(rng);
  auto b = tiny_batch(rng, 10);
  std::vector<std::vector<double>> feats;
  for (const auto& it : b.items) feats.push_back(it.features);
  auto pred = predict(m, 2, feats, Exec::serial);
  EXPECT_EQ(pred, predict(m, 2, feats, Exec::parallel));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    auto z = head_logits(m, 2, oracle::scalar_embedding(m, feats[i]));
    EXPECT_EQ(pred[i], static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
  }
  EXPECT_EQ(embed_all(m, feats, Exec::serial), embed_all(m, feats, Exec::parallel));
}

TEST(Kernels, ShapeErrorsThrow) {
  std::mt19937_64 rng(10);
  auto m = tiny_model(rng);
  auto b = tiny_batch(rng, 3);
  b.items[1].features.pop_back();
  EXPECT_THROW(cotrain_loss(m, b, LossOptions{}, {}, Exec::serial), std::invalid_argument);
  EXPECT_THROW(cotrain_loss(m, MixedBatch{}, LossOptions{}, {}, Exec::serial), std::invalid_argument);
  auto good = tiny_batch(rng, 3);
  std::vector<double> small(3);
  EXPECT_THROW(cotrain_loss(m, good, LossOptions{}, small, Exec::serial), std::invalid_argument);
  EXPECT_THROW(plain_loss(m, good, 7, LossOptions{}, {}, Exec::serial), std::invalid_argument);
}
