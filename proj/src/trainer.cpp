#include "signmix/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace signmix {

LanguageData prepare_language(const DatasetManifest& m, const FeatureStore& store, LabelMode mode) {
  LanguageData d;
  d.language = m.language;
  d.space = mode == LabelMode::group ? group_space(m) : gloss_space(m);
  d.store = &store;
  const auto classes = sample_classes(m, mode, d.space);
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto& s = m.samples[i];
    if (s.subset == Subset::unassigned) continue;
    if (!store.contains(s.sample_id)) throw std::invalid_argument("no features for sample '" + s.sample_id + "'");
    if (s.subset == Subset::train) {
      d.train.push_back(s);
      d.train_labels.push_back(classes[i]);
    } else {
      d.test.push_back(s);
      d.test_labels.push_back(classes[i]);
    }
  }
  return d;
}

EncoderMode encoder_mode_from_string(const std::string& s) {
  if (s == "scratch") return EncoderMode::scratch;
  if (s == "pretrained") return EncoderMode::pretrained;
  if (s == "frozen") return EncoderMode::frozen;
  throw std::invalid_argument("unknown encoder mode '" + s + "'");
}

const char* to_string(EncoderMode m) {
  switch (m) {
    case EncoderMode::scratch: return "scratch";
    case EncoderMode::pretrained: return "pretrained";
    case EncoderMode::frozen: return "frozen";
  }
  return "?";
}

Record metrics_record(const EpochMetrics& m) {
  Record r("epoch");
  r.add("epoch", m.epoch).add("step", m.step).add("lr", m.lr);
  std::vector<std::string> langs;
  for (const auto& l : m.languages) langs.push_back(l.code);
  r.add_list("languages", langs).add_doubles("loss", m.loss).add_doubles("accuracy", m.accuracy);
  return r;
}

Model make_model(const std::vector<LanguageData>& data, const TrainerConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("no training languages");
  const auto dim = data.front().store->dim();
  std::vector<HeadSpec> heads;
  for (const auto& d : data) {
    if (d.store->dim() != dim) throw std::invalid_argument("feature dimensions differ between languages");
    heads.push_back({d.language, d.space.labels()});
  }
  auto enc = std::make_shared<MlpEncoder>(static_cast<std::size_t>(cfg.clip.length), dim, cfg.hidden_dim,
                                          cfg.embed_dim);
  Model model(enc, std::move(heads));
  Rng init_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  model.init(init_rng);
  return model;
}

std::size_t steps_per_epoch(const std::vector<LanguageData>& data, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::size_t n = 0;
  for (const auto& d : data) n += d.train.size();
  return (n + batch_size - 1) / batch_size;
}

std::vector<double> clip_features(const FeatureStore& store, const SampleRecord& rec, const ClipSpec& clip) {
  auto c = center_clip(rec, clip);
  std::vector<double> out(c.frame_indices.size() * store.dim());
  store.gather(rec.sample_id, c.frame_indices, out);
  return out;
}

std::vector<std::size_t> predict_samples(const Model& model, std::size_t head, const std::vector<SampleRecord>& samples,
                                         const FeatureStore& store, const ClipSpec& clip, Exec exec) {
  std::vector<std::vector<double>> feats;
  feats.reserve(samples.size());
  for (const auto& s : samples) feats.push_back(clip_features(store, s, clip));
  return predict(model, head, feats, exec);
}

double accuracy_of(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction count mismatch");
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

namespace {

BatchItem build_item(const LanguageData& d, std::size_t idx, const TrainerConfig& cfg, Rng& rng) {
  const auto& rec = d.train[idx];
  auto clip = sample_clip(rec, cfg.clip, rng);
  auto indices = cfg.augment ? apply_temporal_augment(clip.frame_indices, cfg.augment_cfg, rng) : clip.frame_indices;
  std::vector<double> feat(indices.size() * d.store->dim());
  d.store->gather(rec.sample_id, indices, feat);
  return make_item(rec.sample_id, d.language, std::move(feat), d.train_labels[idx], d.space.size(),
                   clip.boundary_targets);
}

struct Setup {
  TrainPlan plan;
  LossOptions loss;
  AdamW opt;
};

Setup prepare(Model& model, const std::vector<LanguageData>& data, const TrainerConfig& cfg, const Model* init) {
  if (cfg.mode != EncoderMode::scratch) {
    if (!init) throw std::invalid_argument(std::string("encoder mode '") + to_string(cfg.mode) + "' needs initial weights");
    model.load_weights_from(*init, true);
  }
  TrainPlan plan = cfg.plan;
  plan.steps_per_epoch = static_cast<double>(steps_per_epoch(data, cfg.batch_size));
  plan.validate();
  LossOptions loss = cfg.loss;
  AdamW opt(model.param_count(), cfg.optimizer);
  if (cfg.mode == EncoderMode::frozen) {
    loss.encoder_gradient = false;
    opt.freeze_range(0, model.encoder_param_count());
  }
  return {plan, loss, std::move(opt)};
}

void check_finite(const LossReport& rep, const MixedBatch& batch, int epoch, std::int64_t step) {
  if (std::isfinite(rep.total)) return;
  std::ostringstream msg;
  msg << "non-finite loss at epoch " << epoch << " step " << step << " (total=" << rep.total
      << ", regression=" << rep.regression << ") samples:";
  for (const auto& item : batch.items) msg << ' ' << item.sample_id;
  throw std::runtime_error(msg.str());
}

void evaluate_epoch(const Model& model, const std::vector<LanguageData>& data, const TrainerConfig& cfg,
                    EpochMetrics& m) {
  m.accuracy.assign(data.size(), std::numeric_limits<double>::quiet_NaN());
  if (!cfg.evaluate_each_epoch) return;
  for (std::size_t h = 0; h < data.size(); ++h) {
    if (data[h].test.empty()) continue;
    auto pred = predict_samples(model, h, data[h].test, *data[h].store, cfg.clip, cfg.exec);
    m.accuracy[h] = accuracy_of(pred, data[h].test_labels);
  }
}

}  // namespace

TrainResult train(const std::vector<LanguageData>& data, const TrainerConfig& cfg, const Model* init,
                  std::ostream* log) {
  Model model = make_model(data, cfg);
  auto [plan, loss, opt] = prepare(model, data, cfg, init);
  const auto total = plan.total_steps();
  const auto n_lang = data.size();
  std::vector<LanguageTag> languages;
  for (const auto& d : data) languages.push_back(d.language);

  Rng rng(cfg.seed);
  std::vector<double> grad(model.param_count());
  TrainResult result{model, {}};
  std::int64_t step = 0;
  int epoch = 0;
  while (step < total) {
    ++epoch;
    std::vector<std::vector<std::size_t>> order(n_lang);
    std::vector<std::size_t> remaining(n_lang);
    std::size_t left = 0;
    for (std::size_t l = 0; l < n_lang; ++l) {
      order[l].resize(data[l].train.size());
      std::iota(order[l].begin(), order[l].end(), std::size_t{0});
      std::shuffle(order[l].begin(), order[l].end(), rng);
      remaining[l] = order[l].size();
      left += remaining[l];
    }
    if (left == 0) throw std::invalid_argument("no training samples");

    EpochMetrics m;
    m.epoch = epoch;
    m.languages = languages;
    std::vector<double> loss_sum(n_lang, 0.0);
    std::vector<std::size_t> loss_n(n_lang, 0);
    while (left > 0 && step < total) {
      MixedBatch batch;
      while (batch.items.size() < cfg.batch_size && left > 0) {
        std::size_t lang = 0;
        std::size_t live = 0;
        for (std::size_t l = 0; l < n_lang; ++l) live += remaining[l] > 0;
        if (live == 1) {
          while (remaining[lang] == 0) ++lang;
        } else {
          auto r = std::uniform_int_distribution<std::size_t>(0, left - 1)(rng);
          while (r >= remaining[lang]) r -= remaining[lang++];
        }
        const auto idx = order[lang][order[lang].size() - remaining[lang]];
        --remaining[lang];
        --left;
        batch.items.push_back(build_item(data[lang], idx, cfg, rng));
      }
      auto subs = gate_split(batch, languages);
      for (auto& s : subs) s = maybe_mix(std::move(s), cfg.mix, static_cast<std::size_t>(cfg.clip.length), rng);
      batch = merge_sub_batches(std::move(subs));

      auto rep = cotrain_loss(result.model, batch, loss, grad, cfg.exec);
      check_finite(rep, batch, epoch, step);
      m.lr = lr_at(plan, step);
      opt.step(result.model.params(), grad, m.lr);
      ++step;
      for (std::size_t h = 0; h < n_lang; ++h) {
        if (rep.counts[h] == 0) continue;
        loss_sum[h] += rep.cls[h];
        loss_n[h] += 1;
      }
    }
    m.step = step;
    for (std::size_t h = 0; h < n_lang; ++h) {
      m.loss.push_back(loss_n[h] ? loss_sum[h] / static_cast<double>(loss_n[h])
                                 : std::numeric_limits<double>::quiet_NaN());
    }
    evaluate_epoch(result.model, data, cfg, m);
    if (log) *log << metrics_record(m).to_line() << '\n';
    result.metrics.push_back(std::move(m));
  }
  return result;
}

TrainResult train_single(const LanguageData& data, const TrainerConfig& cfg, const Model* init, std::ostream* log) {
  const std::vector<LanguageData> one{data};
  Model model = make_model(one, cfg);
  auto [plan, loss, opt] = prepare(model, one, cfg, init);
  const auto total = plan.total_steps();
  if (data.train.empty()) throw std::invalid_argument("no training samples");

  Rng rng(cfg.seed);
  std::vector<double> grad(model.param_count());
  TrainResult result{model, {}};
  std::int64_t step = 0;
  int epoch = 0;
  while (step < total) {
    ++epoch;
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    EpochMetrics m;
    m.epoch = epoch;
    m.languages = {data.language};
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    for (std::size_t next = 0; next < order.size() && step < total;) {
      SubBatch sub;
      sub.language = data.language;
      for (; next < order.size() && sub.items.size() < cfg.batch_size; ++next) {
        sub.origin.push_back(sub.items.size());
        sub.items.push_back(build_item(data, order[next], cfg, rng));
      }
      sub = maybe_mix(std::move(sub), cfg.mix, static_cast<std::size_t>(cfg.clip.length), rng);
      MixedBatch batch{std::move(sub.items)};

      auto rep = plain_loss(result.model, batch, 0, loss, grad, cfg.exec);
      check_finite(rep, batch, epoch, step);
      m.lr = lr_at(plan, step);
      opt.step(result.model.params(), grad, m.lr);
      ++step;
      loss_sum += rep.cls[0];
      ++loss_n;
    }
    m.step = step;
    m.loss = {loss_n ? loss_sum / static_cast<double>(loss_n) : std::numeric_limits<double>::quiet_NaN()};
    evaluate_epoch(result.model, one, cfg, m);
    if (log) *log << metrics_record(m).to_line() << '\n';
    result.metrics.push_back(std::move(m));
  }
  return result;
}

}  // namespace signmix
