#include "signmix/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "signmix/eval.hpp"

namespace signmix {

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"baseline", "transfer-frozen",      "transfer-full", "cotrain",
                                              "label-map", "kshot", "grouped-vs-ungrouped"};
  return names;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TrainerConfig trainer_config_from(const Config& c, TrainerConfig t) {
  auto train = c.section("train");
  train.reject_unknown({"batch", "hidden", "embed", "augment", "mix", "mix_probability", "mix_alpha", "cutmix_share",
                        "label_smoothing", "regression", "regression_weight", "regression_languages",
                        "parallel", "evaluate_each_epoch", "mode", "steps", "cotrain_steps", "frozen_peak"});
  t.batch_size = static_cast<std::size_t>(train.get_int("batch", static_cast<std::int64_t>(t.batch_size)));
  t.hidden_dim = static_cast<std::size_t>(train.get_int("hidden", static_cast<std::int64_t>(t.hidden_dim)));
  t.embed_dim = static_cast<std::size_t>(train.get_int("embed", static_cast<std::int64_t>(t.embed_dim)));
  t.augment = train.get_bool("augment", t.augment);
  t.mix.enabled = train.get_bool("mix", t.mix.enabled);
  t.mix.probability = train.get_double("mix_probability", t.mix.probability);
  t.mix.alpha = train.get_double("mix_alpha", t.mix.alpha);
  t.mix.cutmix_share = train.get_double("cutmix_share", t.mix.cutmix_share);
  t.loss.label_smoothing = train.get_double("label_smoothing", t.loss.label_smoothing);
  t.loss.regression = train.get_bool("regression", t.loss.regression);
  t.loss.regression_weight = train.get_double("regression_weight", t.loss.regression_weight);
  if (train.has("regression_languages")) {
    t.loss.regression_languages.clear();
    for (const auto& code : split_list(train.get("regression_languages"))) t.loss.regression_languages.push_back({code});
  }
  t.exec = train.get_bool("parallel", t.exec == Exec::parallel) ? Exec::parallel : Exec::serial;
  t.evaluate_each_epoch = train.get_bool("evaluate_each_epoch", t.evaluate_each_epoch);
  if (train.has("mode")) t.mode = encoder_mode_from_string(train.get("mode"));
  if (t.batch_size == 0 || t.hidden_dim == 0 || t.embed_dim == 0) {
    throw std::invalid_argument("train.batch, train.hidden and train.embed must be positive");
  }

  auto aug = c.section("augment");
  aug.reject_unknown({"p_speed", "p_drop", "drop_frac", "p_truncate", "truncate_frac"});
  t.augment_cfg.p_speed = aug.get_double("p_speed", t.augment_cfg.p_speed);
  t.augment_cfg.p_drop = aug.get_double("p_drop", t.augment_cfg.p_drop);
  t.augment_cfg.drop_frac = aug.get_double("drop_frac", t.augment_cfg.drop_frac);
  t.augment_cfg.p_truncate = aug.get_double("p_truncate", t.augment_cfg.p_truncate);
  t.augment_cfg.truncate_frac = aug.get_double("truncate_frac", t.augment_cfg.truncate_frac);

  auto opt = c.section("optimizer");
  opt.reject_unknown({"beta1", "beta2", "eps", "weight_decay"});
  t.optimizer.beta1 = opt.get_double("beta1", t.optimizer.beta1);
  t.optimizer.beta2 = opt.get_double("beta2", t.optimizer.beta2);
  t.optimizer.eps = opt.get_double("eps", t.optimizer.eps);
  t.optimizer.weight_decay = opt.get_double("weight_decay", t.optimizer.weight_decay);

  auto plan = c.section("plan");
  plan.reject_unknown({"total_epochs", "warmup_end_epoch", "cosine_start_epoch", "cosine_end_epoch", "lr_init",
                       "lr_peak", "lr_final", "steps_per_epoch", "scale_factor"});
  auto& p = t.plan;
  p.total_epochs = plan.get_double("total_epochs", p.total_epochs);
  p.warmup_end_epoch = plan.get_double("warmup_end_epoch", p.warmup_end_epoch);
  p.cosine_start_epoch = plan.get_double("cosine_start_epoch", p.cosine_start_epoch);
  p.cosine_end_epoch = plan.get_double("cosine_end_epoch", p.cosine_end_epoch);
  p.lr_init = plan.get_double("lr_init", p.lr_init);
  p.lr_peak = plan.get_double("lr_peak", p.lr_peak);
  p.lr_final = plan.get_double("lr_final", p.lr_final);
  p.steps_per_epoch = plan.get_double("steps_per_epoch", p.steps_per_epoch);
  p.scale_factor = plan.get_double("scale_factor", p.scale_factor);
  p.validate();
  return t;
}

ExperimentConfig experiment_config(const Config& c) {
  static const std::vector<std::string> top{"scenario", "seed", "target", "source", "kshot", "kshot_values",
                                            "data.source", "data.manifests", "data.features"};
  for (const auto& [key, value] : c.entries()) {
    if (starts_with(key, "train.") || starts_with(key, "plan.") || starts_with(key, "synth.") ||
        starts_with(key, "augment.") || starts_with(key, "optimizer.")) {
      continue;
    }
    if (std::find(top.begin(), top.end(), key) == top.end()) throw std::invalid_argument("unknown key '" + key + "'");
  }
  ExperimentConfig e;
  e.scenarios = split_list(c.get("scenario", "baseline"));
  if (e.scenarios.empty()) throw std::invalid_argument("no scenario given");
  for (const auto& s : e.scenarios) {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      throw std::invalid_argument("unknown scenario '" + s + "'");
    }
  }
  e.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
  e.target = c.get("target", e.target);
  e.source = c.get("source", e.source);
  e.kshot = static_cast<int>(c.get_int("kshot", 0));
  if (e.kshot < 0) throw std::invalid_argument("kshot must be non-negative");
  if (c.has("kshot_values")) {
    e.kshot_values.clear();
    for (const auto& v : split_list(c.get("kshot_values"))) e.kshot_values.push_back(std::stoi(v));
  }

  const auto source = c.get("data.source", "synthetic");
  if (source == "synthetic") {
    e.synthetic = true;
  } else if (source == "files") {
    e.synthetic = false;
    for (const auto& p : split_list(c.get("data.manifests"))) e.manifests.emplace_back(p);
    e.features = c.get("data.features");
  } else {
    throw std::invalid_argument("data.source must be 'synthetic' or 'files'");
  }

  auto s = c.section("synth");
  s.reject_unknown({"languages", "classes", "shared_fraction", "samples_per_class", "signers", "dim", "noise",
                    "signer_scale", "signer_rank", "pose", "motion", "share_perturbation", "confusable_pairs", "confusable_distance",
                    "min_sign_length", "max_sign_length", "max_padding", "test_fraction", "seed"});
  auto& y = e.synth;
  y.n_languages = static_cast<int>(s.get_int("languages", y.n_languages));
  y.classes_per_language = static_cast<int>(s.get_int("classes", y.classes_per_language));
  y.shared_prototype_fraction = s.get_double("shared_fraction", y.shared_prototype_fraction);
  y.samples_per_class = static_cast<int>(s.get_int("samples_per_class", y.samples_per_class));
  y.signers = static_cast<int>(s.get_int("signers", y.signers));
  y.feature_dim = static_cast<int>(s.get_int("dim", y.feature_dim));
  y.noise_scale = s.get_double("noise", y.noise_scale);
  y.signer_scale = s.get_double("signer_scale", y.signer_scale);
  y.signer_rank = static_cast<int>(s.get_int("signer_rank", y.signer_rank));
  y.pose_scale = s.get_double("pose", y.pose_scale);
  y.motion_scale = s.get_double("motion", y.motion_scale);
  y.share_perturbation = s.get_double("share_perturbation", y.share_perturbation);
  y.confusable_pairs = static_cast<int>(s.get_int("confusable_pairs", y.confusable_pairs));
  y.confusable_distance = s.get_double("confusable_distance", y.confusable_distance);
  y.min_sign_length = static_cast<int>(s.get_int("min_sign_length", y.min_sign_length));
  y.max_sign_length = static_cast<int>(s.get_int("max_sign_length", y.max_sign_length));
  y.max_padding = static_cast<int>(s.get_int("max_padding", y.max_padding));
  y.test_fraction = s.get_double("test_fraction", y.test_fraction);
  y.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<std::int64_t>(e.seed)));
  if (e.synthetic) y.validate();

  TrainerConfig base;
  base.evaluate_each_epoch = false;
  e.train = trainer_config_from(c, base);
  e.steps = c.get_int("train.steps", e.steps);
  if (e.steps < 1) throw std::invalid_argument("train.steps must be positive");
  e.cotrain_steps = c.get_int("train.cotrain_steps", 0);
  if (e.cotrain_steps < 0) throw std::invalid_argument("train.cotrain_steps must be non-negative");
  e.frozen_peak = c.get_double("train.frozen_peak", e.frozen_peak);
  e.config_hash = hex64(c.hash());
  return e;
}

TrainPlan fit_plan_to_steps(const TrainPlan& base, std::size_t steps_per_epoch, std::int64_t steps) {
  if (steps < 1 || steps_per_epoch == 0) throw std::invalid_argument("steps and steps per epoch must be positive");
  const double f = base.total_epochs * static_cast<double>(steps_per_epoch) / static_cast<double>(steps);
  TrainPlan p = rescale_plan(base, f);
  p.steps_per_epoch = static_cast<double>(steps_per_epoch);
  return p;
}

const ReportRow* Report::find(const std::string& scenario, const std::string& method, const std::string& language,
                              int kshot) const {
  for (const auto& r : rows) {
    if (r.scenario == scenario && r.method == method && (language.empty() || r.language == language) &&
        (kshot < 0 || r.kshot == kshot)) {
      return &r;
    }
  }
  return nullptr;
}

Record row_record(const ReportRow& row) {
  Record r("row");
  r.add("scenario", row.scenario).add("method", row.method).add("language", row.language).add("kshot", row.kshot);
  r.add("accuracy", row.accuracy);
  if (row.non_vssign) r.add("non_vssign", *row.non_vssign); else r.add("non_vssign", "n/a");
  if (row.vssign) r.add("vssign", *row.vssign); else r.add("vssign", "n/a");
  r.add("train", row.train_samples).add("test", row.test_samples).add("steps", row.steps);
  r.add("config", row.config_hash).add("test_set", row.test_set_hash);
  return r;
}

std::string format_table(const Report& report) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "scenario" << std::setw(18) << "method" << std::setw(8) << "lang"
      << std::setw(6) << "k" << std::setw(10) << "whole" << std::setw(12) << "non-vssign" << std::setw(10) << "vssign"
      << "test set\n";
  auto pct = [](std::optional<double> v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << 100.0 * *v;
    return s.str();
  };
  for (const auto& r : report.rows) {
    out << std::setw(22) << r.scenario << std::setw(18) << r.method << std::setw(8) << r.language << std::setw(6)
        << (r.kshot ? std::to_string(r.kshot) : std::string("all")) << std::setw(10) << pct(r.accuracy)
        << std::setw(12) << pct(r.non_vssign) << std::setw(10) << pct(r.vssign) << r.test_set_hash << '\n';
  }
  return out.str();
}

std::string test_set_hash(const DatasetManifest& m) {
  std::vector<std::string> ids;
  for (const auto& s : m.samples) {
    if (s.subset == Subset::test) ids.push_back(s.sample_id);
  }
  std::sort(ids.begin(), ids.end());
  std::string joined;
  for (const auto& id : ids) joined += id + '\n';
  return hex64(fnv1a64(joined));
}

namespace {

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, std::ostream* log) : cfg_(cfg), log_(log) {
    if (cfg.synthetic) {
      auto data = gen_synthetic(cfg.synth);
      manifests_ = std::move(data.manifests);
      store_ = std::move(data.features);
    } else {
      for (const auto& p : cfg.manifests) manifests_.push_back(load_manifest(p));
      store_ = FeatureStore::load(cfg.features);
    }
    target_ = index_of(cfg.target);
    source_ = index_of(cfg.source);
  }

  Report run() {
    for (const auto& s : cfg_.scenarios) {
      if (log_) *log_ << "# scenario " << s << '\n';
      if (s == "baseline") {
        baseline(s, cfg_.kshot);
      } else if (s == "transfer-frozen") {
        transfer(s, cfg_.kshot, EncoderMode::frozen);
      } else if (s == "transfer-full") {
        transfer(s, cfg_.kshot, EncoderMode::pretrained);
      } else if (s == "cotrain") {
        cotrain(s, cfg_.kshot);
      } else if (s == "label-map") {
        label_map(s, cfg_.kshot);
      } else if (s == "kshot") {
        for (int k : cfg_.kshot_values) {
          baseline(s, k);
          transfer(s, k, EncoderMode::pretrained);
        }
      } else if (s == "grouped-vs-ungrouped") {
        grouped(s, cfg_.kshot);
      }
    }
    return report_;
  }

 private:
  std::size_t index_of(const std::string& code) const {
    for (std::size_t i = 0; i < manifests_.size(); ++i) {
      if (manifests_[i].language.code == code) return i;
    }
    throw std::invalid_argument("no manifest for language '" + code + "'");
  }

  const DatasetManifest& target_manifest(int k) {
    if (k == 0) return manifests_[target_];
    auto it = truncated_.find(k);
    if (it == truncated_.end()) it = truncated_.emplace(k, kshot_truncate(manifests_[target_], k, cfg_.seed)).first;
    return it->second;
  }

  std::int64_t budget(const std::vector<LanguageData>& data) const {
    if (data.size() < 2) return cfg_.steps;
    return cfg_.cotrain_steps ? cfg_.cotrain_steps : cfg_.steps * static_cast<std::int64_t>(data.size());
  }

  TrainPlan plan_for(const std::vector<LanguageData>& data, EncoderMode mode) const {
    auto plan = fit_plan_to_steps(cfg_.train.plan, steps_per_epoch(data, cfg_.train.batch_size), budget(data));
    if (mode == EncoderMode::frozen) plan = frozen_plan(plan, cfg_.frozen_peak);
    return plan;
  }

  TrainResult run_train(const std::vector<LanguageData>& data, EncoderMode mode, const Model* init) {
    TrainerConfig t = cfg_.train;
    t.mode = mode;
    t.seed = cfg_.seed;
    t.plan = plan_for(data, mode);
    return train(data, t, init, log_);
  }

  const Model& source_model() {
    if (!source_model_) {
      if (log_) *log_ << "# training source model " << cfg_.source << '\n';
      auto data = prepare_language(manifests_[source_], store_);
      source_model_ = run_train({data}, EncoderMode::scratch, nullptr).model;
    }
    return *source_model_;
  }

  std::int64_t steps_for(const std::vector<LanguageData>& data, EncoderMode mode) const {
    return plan_for(data, mode).total_steps();
  }

  ReportRow row(const std::string& scenario, const std::string& method, const DatasetManifest& m, int k,
                const LanguageData& d) const {
    ReportRow r;
    r.scenario = scenario;
    r.method = method;
    r.language = m.language.code;
    r.kshot = k;
    r.train_samples = d.train.size();
    r.test_samples = d.test.size();
    r.config_hash = cfg_.config_hash;
    r.test_set_hash = test_set_hash(m);
    return r;
  }

  double test_accuracy(const Model& model, std::size_t head, const LanguageData& d) const {
    auto pred = predict_samples(model, head, d.test, store_, cfg_.train.clip, cfg_.train.exec);
    return top1_accuracy(make_predictions(d.test, pred, d.test_labels, d.space));
  }

  void baseline(const std::string& scenario, int k) {
    const auto& m = target_manifest(k);
    auto d = prepare_language(m, store_);
    auto r = row(scenario, "scratch", m, k, d);
    auto res = run_train({d}, EncoderMode::scratch, nullptr);
    r.accuracy = test_accuracy(res.model, 0, d);
    r.steps = steps_for({d}, EncoderMode::scratch);
    report_.rows.push_back(r);
  }

  void transfer(const std::string& scenario, int k, EncoderMode mode) {
    const auto& src = source_model();
    const auto& m = target_manifest(k);
    auto d = prepare_language(m, store_);
    auto r = row(scenario, mode == EncoderMode::frozen ? "frozen" : "full", m, k, d);
    auto res = run_train({d}, mode, &src);
    r.accuracy = test_accuracy(res.model, 0, d);
    r.steps = steps_for({d}, mode);
    report_.rows.push_back(r);
  }

  void cotrain(const std::string& scenario, int k) {
    const auto& src = source_model();
    std::vector<const DatasetManifest*> ms;
    std::vector<LanguageData> data;
    for (std::size_t i = 0; i < manifests_.size(); ++i) {
      ms.push_back(i == target_ ? &target_manifest(k) : &manifests_[i]);
      data.push_back(prepare_language(*ms.back(), store_));
    }
    auto res = run_train(data, EncoderMode::pretrained, &src);
    const auto steps = steps_for(data, EncoderMode::pretrained);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].test.empty()) continue;
      auto r = row(scenario, "cotrain", *ms[i], i == target_ ? k : 0, data[i]);
      r.accuracy = test_accuracy(res.model, i, data[i]);
      r.steps = steps;
      report_.rows.push_back(r);
    }
  }

  void label_map(const std::string& scenario, int k) {
    const auto& src = source_model();
    const auto& m = target_manifest(k);
    auto d = prepare_language(m, store_);
    const auto& source_space = src.heads().front().labels;
    LabelSpace src_space(source_space);

    auto train_pred = predict_samples(src, 0, d.train, store_, cfg_.train.clip, cfg_.train.exec);
    PredictionSet build;
    build.predicted_space = src_space;
    build.truth_space = d.space;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
      build.rows.push_back({d.train[i].sample_id, train_pred[i], d.train_labels[i], d.language});
    }
    auto map = build_label_map(build);

    auto test_pred = predict_samples(src, 0, d.test, store_, cfg_.train.clip, cfg_.train.exec);
    PredictionSet test;
    test.predicted_space = src_space;
    test.truth_space = d.space;
    for (std::size_t i = 0; i < d.test.size(); ++i) {
      test.rows.push_back({d.test[i].sample_id, test_pred[i], d.test_labels[i], d.language});
    }
    auto r = row(scenario, "label-map", m, k, d);
    r.accuracy = top1_accuracy(apply_label_map(map, test));
    report_.rows.push_back(r);
  }

  void grouped(const std::string& scenario, int k) {
    const auto& m = target_manifest(k);
    if (!m.has_grouping()) throw std::invalid_argument("target manifest has no grouping");
    for (auto mode : {LabelMode::gloss, LabelMode::group}) {
      auto d = prepare_language(m, store_, mode);
      auto res = run_train({d}, EncoderMode::scratch, nullptr);
      auto pred = predict_samples(res.model, 0, d.test, store_, cfg_.train.clip, cfg_.train.exec);
      auto b = grouped_accuracy_breakdown(make_predictions(d.test, pred, d.test_labels, d.space), m);
      auto r = row(scenario, mode == LabelMode::gloss ? "ungrouped" : "grouped", m, k, d);
      r.accuracy = b.whole.accuracy();
      if (b.non_vssign) r.non_vssign = b.non_vssign->accuracy();
      if (b.vssign) r.vssign = b.vssign->accuracy();
      r.steps = steps_for({d}, EncoderMode::scratch);
      report_.rows.push_back(r);
    }
  }

  const ExperimentConfig& cfg_;
  std::ostream* log_;
  std::vector<DatasetManifest> manifests_;
  FeatureStore store_;
  std::size_t target_ = 0, source_ = 0;
  std::map<int, DatasetManifest> truncated_;
  std::optional<Model> source_model_;
  Report report_;
};

}  // namespace

Report run_experiment(const ExperimentConfig& cfg, std::ostream* log) { return Runner(cfg, log).run(); }

Report run_experiment(const std::filesystem::path& config_path, std::ostream* log) {
  return run_experiment(experiment_config(Config::load(config_path)), log);
}

}  // namespace signmix
