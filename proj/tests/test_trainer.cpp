#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "signmix/synth.hpp"
#include "signmix/trainer.hpp"

using namespace signmix;

namespace {

struct Fixture {
  SyntheticData data;
  std::vector<LanguageData> langs;

  explicit Fixture(int n_languages = 2) {
    SyntheticSpec s;
    s.n_languages = n_languages;
    s.classes_per_language = 4;
    s.samples_per_class = 6;
    s.signers = 5;
    s.feature_dim = 3;
    s.seed = 21;
    data = gen_synthetic(s);
    for (const auto& m : data.manifests) langs.push_back(prepare_language(m, data.features));
  }
};

TrainerConfig small_config() {
  TrainerConfig c;
  c.plan.total_epochs = 3;
  c.plan.warmup_end_epoch = 1;
  c.plan.cosine_start_epoch = 1;
  c.plan.cosine_end_epoch = 2;
  c.batch_size = 8;
  c.hidden_dim = 8;
  c.embed_dim = 6;
  c.seed = 5;
  return c;
}

bool same_params(const Model& a, const Model& b) {
  return std::equal(a.params().begin(), a.params().end(), b.params().begin(), b.params().end());
}

}  // namespace

TEST(Trainer, PrepareLanguageSplitsAndIndexes) {
  Fixture f;
  const auto& d = f.langs[0];
  EXPECT_EQ(d.train.size() + d.test.size(), 24u);
  EXPECT_EQ(d.train.size(), d.train_labels.size());
  for (std::size_t i = 0; i < d.train.size(); ++i) EXPECT_EQ(d.space.label(d.train_labels[i]), d.train[i].gloss);
  FeatureStore empty(3);
  EXPECT_THROW(prepare_language(f.data.manifests[0], empty), std::invalid_argument);
}

TEST(Trainer, StepsPerEpochIsCeiling) {
  Fixture f;
  auto n = f.langs[0].train.size() + f.langs[1].train.size();
  EXPECT_EQ(steps_per_epoch(f.langs, 8), (n + 7) / 8);
  EXPECT_THROW(steps_per_epoch(f.langs, 0), std::invalid_argument);
}

TEST(Trainer, RunsPlannedStepsAndLogsEpochs) {
  Fixture f;
  auto cfg = small_config();
  std::ostringstream log;
  auto r = train(f.langs, cfg, nullptr, &log);
  ASSERT_EQ(r.metrics.size(), 3u);
  EXPECT_EQ(r.metrics.back().step, static_cast<std::int64_t>(3 * steps_per_epoch(f.langs, 8)));
  for (const auto& m : r.metrics) {
    ASSERT_EQ(m.accuracy.size(), 2u);
    EXPECT_FALSE(std::isnan(m.accuracy[0]));
    EXPECT_TRUE(std::isfinite(m.loss[0]));
  }
  auto rec = Record::parse(log.str().substr(0, log.str().find('\n')));
  EXPECT_EQ(rec.kind(), "epoch");
  EXPECT_EQ(rec.get_list("languages"), (std::vector<std::string>{"lang0", "lang1"}));
}

TEST(Trainer, DeterministicAcrossRunsAndExecModes) {
  Fixture f;
  auto cfg = small_config();
  auto a = train(f.langs, cfg);
  auto b = train(f.langs, cfg);
  cfg.exec = Exec::serial;
  auto c = train(f.langs, cfg);
  EXPECT_TRUE(same_params(a.model, b.model));
  EXPECT_TRUE(same_params(a.model, c.model));
  cfg.seed = 6;
  EXPECT_FALSE(same_params(a.model, train(f.langs, cfg).model));
}

TEST(Trainer, SingleLanguageCotrainEqualsPlainPipeline) {
  Fixture f(1);
  auto cfg = small_config();
  auto co = train(f.langs, cfg);
  auto plain = train_single(f.langs[0], cfg);
  EXPECT_TRUE(same_params(co.model, plain.model));
  ASSERT_EQ(co.metrics.size(), plain.metrics.size());
  for (std::size_t e = 0; e < co.metrics.size(); ++e) EXPECT_NEAR(co.metrics[e].loss[0], plain.metrics[e].loss[0], 1e-10);
}

TEST(Trainer, FrozenModeLeavesEncoderBitIdentical) {
  Fixture f;
  auto cfg = small_config();
  auto source = train({f.langs[0]}, cfg).model;
  cfg.mode = EncoderMode::frozen;
  auto r = train({f.langs[1]}, cfg, &source);
  EXPECT_TRUE(std::equal(r.model.encoder_params().begin(), r.model.encoder_params().end(),
                         source.encoder_params().begin()));
  cfg.mode = EncoderMode::pretrained;
  auto tuned = train({f.langs[1]}, cfg, &source);
  EXPECT_FALSE(std::equal(tuned.model.encoder_params().begin(), tuned.model.encoder_params().end(),
                          source.encoder_params().begin()));
  EXPECT_THROW(train({f.langs[1]}, cfg, nullptr), std::invalid_argument);
}

TEST(Trainer, TrainingReducesLoss) {
  Fixture f;
  auto cfg = small_config();
  cfg.plan.total_epochs = 12;
  cfg.plan.cosine_end_epoch = 10;
  auto r = train(f.langs, cfg);
  EXPECT_LT(r.metrics.back().loss[0], r.metrics.front().loss[0]);
}

TEST(Trainer, NonFiniteLossNamesSamples) {
  Fixture f(1);
  FeatureStore poisoned(3);
  for (const auto& id : f.data.features.sample_ids()) {
    auto frames = f.data.features.frames(id);
    std::vector<double> copy(frames.begin(), frames.end());
    for (auto& x : copy) x = std::nan("");
    poisoned.add(id, copy);
  }
  auto lang = prepare_language(f.data.manifests[0], poisoned);
  auto cfg = small_config();
  try {
    train({lang}, cfg);
    FAIL();
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("non-finite loss"), std::string::npos);
    EXPECT_NE(msg.find("lang0_x"), std::string::npos);
  }
}

TEST(Trainer, PredictionHelpers) {
  Fixture f;
  auto cfg = small_config();
  auto r = train(f.langs, cfg);
  auto pred = predict_samples(r.model, 1, f.langs[1].test, f.data.features, cfg.clip);
  EXPECT_EQ(pred.size(), f.langs[1].test.size());
  auto acc = accuracy_of(pred, f.langs[1].test_labels);
  EXPECT_NEAR(acc, r.metrics.back().accuracy[1], 1e-15);
  EXPECT_TRUE(std::isnan(accuracy_of({}, {})));
  EXPECT_THROW(accuracy_of({1}, {}), std::invalid_argument);
  EXPECT_EQ(clip_features(f.data.features, f.langs[0].test[0], cfg.clip).size(), 32u * 3);
}

TEST(Trainer, EncoderModeStrings) {
  for (auto m : {EncoderMode::scratch, EncoderMode::pretrained, EncoderMode::frozen}) {
    EXPECT_EQ(encoder_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(encoder_mode_from_string("warm"), std::invalid_argument);
}
