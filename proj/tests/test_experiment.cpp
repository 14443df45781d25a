#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "signmix/experiment.hpp"

using namespace signmix;

namespace {

const char* kSmall =
    "scenario = baseline, transfer-frozen, transfer-full, cotrain, label-map, kshot\n"
    "seed = 2\n"
    "kshot = 2\n"
    "kshot_values = 1, 2\n"
    "synth.languages = 2\n"
    "synth.classes = 4\n"
    "synth.samples_per_class = 6\n"
    "synth.signers = 5\n"
    "synth.dim = 3\n"
    "train.steps = 12\n"
    "train.batch = 8\n"
    "train.hidden = 8\n"
    "train.embed = 6\n";

}  // namespace

TEST(Experiment, ConfigParsing) {
  auto e = experiment_config(Config::parse(kSmall));
  EXPECT_EQ(e.scenarios.size(), 6u);
  EXPECT_EQ(e.kshot, 2);
  EXPECT_EQ(e.kshot_values, (std::vector<int>{1, 2}));
  EXPECT_EQ(e.synth.n_languages, 2);
  EXPECT_EQ(e.synth.seed, 2u);
  EXPECT_EQ(e.train.batch_size, 8u);
  EXPECT_FALSE(e.train.evaluate_each_epoch);
  EXPECT_EQ(e.config_hash, hex64(Config::parse(kSmall).hash()));
}

TEST(Experiment, ConfigRejectsUnknowns) {
  EXPECT_THROW(experiment_config(Config::parse("scenario = nonsense\n")), std::invalid_argument);
  EXPECT_THROW(experiment_config(Config::parse("colour = red\n")), std::invalid_argument);
  EXPECT_THROW(experiment_config(Config::parse("synth.colour = red\n")), std::invalid_argument);
  EXPECT_THROW(experiment_config(Config::parse("train.colour = red\n")), std::invalid_argument);
  EXPECT_THROW(experiment_config(Config::parse("data.source = cloud\n")), std::invalid_argument);
  EXPECT_THROW(experiment_config(Config::parse("train.steps = 0\n")), std::invalid_argument);
}

TEST(Experiment, TrainerConfigKeys) {
  auto t = trainer_config_from(Config::parse("train.mix = false\ntrain.label_smoothing = 0.2\nplan.lr_peak = 0.01\n"
                                             "optimizer.weight_decay = 0\naugment.p_drop = 0\n"));
  EXPECT_FALSE(t.mix.enabled);
  EXPECT_DOUBLE_EQ(t.loss.label_smoothing, 0.2);
  EXPECT_DOUBLE_EQ(t.plan.lr_peak, 0.01);
  EXPECT_DOUBLE_EQ(t.optimizer.weight_decay, 0.0);
  EXPECT_DOUBLE_EQ(t.augment_cfg.p_drop, 0.0);
}

TEST(Experiment, FitPlanRunsExactlyTheRequestedSteps) {
  TrainPlan base;
  for (std::size_t spe : {1u, 3u, 7u, 40u}) {
    for (std::int64_t steps : {1, 10, 299, 300, 1234}) {
      auto p = fit_plan_to_steps(base, spe, steps);
      EXPECT_EQ(p.total_steps(), steps) << spe << " " << steps;
      EXPECT_EQ(p.steps_per_epoch, static_cast<double>(spe));
      EXPECT_NO_THROW(p.validate());
    }
  }
  EXPECT_THROW(fit_plan_to_steps(base, 0, 5), std::invalid_argument);
}

TEST(Experiment, TestSetHashIgnoresOrderAndTrainSamples) {
  DatasetManifest m;
  m.samples = {{"b", {"s"}, "g", {"x"}, 2, 0, 1, Subset::test}, {"a", {"s"}, "g", {"x"}, 2, 0, 1, Subset::test},
               {"c", {"s"}, "g", {"x"}, 2, 0, 1, Subset::train}};
  auto h = test_set_hash(m);
  std::swap(m.samples[0], m.samples[1]);
  m.samples.pop_back();
  EXPECT_EQ(test_set_hash(m), h);
  m.samples[0].subset = Subset::train;
  EXPECT_NE(test_set_hash(m), h);
}

TEST(Experiment, SmallRunProducesConsistentRows) {
  auto cfg = experiment_config(Config::parse(kSmall));
  std::ostringstream log;
  auto report = run_experiment(cfg, &log);
  for (const char* method : {"scratch", "frozen", "full", "label-map"}) {
    auto* r = report.find(method == std::string("scratch") ? "baseline"
                          : method == std::string("frozen") ? "transfer-frozen"
                          : method == std::string("full")   ? "transfer-full"
                                                            : "label-map",
                          method, "lang1");
    ASSERT_NE(r, nullptr) << method;
    EXPECT_GE(r->accuracy, 0.0);
    EXPECT_LE(r->accuracy, 1.0);
    EXPECT_EQ(r->kshot, 2);
  }
  auto* co = report.find("cotrain", "cotrain", "lang1");
  ASSERT_NE(co, nullptr);
  ASSERT_NE(report.find("cotrain", "cotrain", "lang0"), nullptr);
  EXPECT_EQ(co->steps, 24);  // steps * languages
  EXPECT_EQ(report.find("baseline", "scratch")->steps, 12);

  // every target row is scored on the same test set under the same config
  std::set<std::string> hashes, configs;
  for (const auto& r : report.rows) {
    if (r.language != "lang1") continue;
    hashes.insert(r.test_set_hash);
    configs.insert(r.config_hash);
    EXPECT_LE(r.train_samples, 2u * 4u);
  }
  EXPECT_EQ(hashes.size(), 1u);
  EXPECT_EQ(configs.size(), 1u);
  EXPECT_NE(report.find("kshot", "full", "lang1", 1), nullptr);
  EXPECT_EQ(report.find("kshot", "full", "lang1", 7), nullptr);

  auto again = run_experiment(cfg);
  ASSERT_EQ(again.rows.size(), report.rows.size());
  for (std::size_t i = 0; i < again.rows.size(); ++i) EXPECT_EQ(again.rows[i].accuracy, report.rows[i].accuracy);
  EXPECT_NE(format_table(report).find("label-map"), std::string::npos);
}

TEST(Experiment, GroupedScenarioReportsStrata) {
  auto cfg = experiment_config(Config::parse(
      "scenario = grouped-vs-ungrouped\ntarget = lang0\nsynth.languages = 1\nsynth.classes = 6\n"
      "synth.confusable_pairs = 2\nsynth.samples_per_class = 6\nsynth.signers = 5\nsynth.dim = 3\n"
      "train.steps = 10\ntrain.hidden = 8\ntrain.embed = 6\n"));
  auto report = run_experiment(cfg);
  auto* g = report.find("grouped-vs-ungrouped", "grouped");
  auto* u = report.find("grouped-vs-ungrouped", "ungrouped");
  ASSERT_NE(g, nullptr);
  ASSERT_NE(u, nullptr);
  EXPECT_TRUE(g->vssign.has_value());
  EXPECT_TRUE(g->non_vssign.has_value());
  EXPECT_EQ(g->test_set_hash, u->test_set_hash);
  auto rec = row_record(*g);
  EXPECT_EQ(rec.get("method"), "grouped");
  EXPECT_EQ(rec.get("test_set"), g->test_set_hash);
}

TEST(Experiment, GroupedScenarioNeedsGrouping) {
  auto cfg = experiment_config(Config::parse(
      "scenario = grouped-vs-ungrouped\ntarget = lang0\nsynth.languages = 1\nsynth.classes = 4\n"
      "synth.samples_per_class = 4\nsynth.signers = 5\nsynth.dim = 3\ntrain.steps = 2\n"));
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
}
