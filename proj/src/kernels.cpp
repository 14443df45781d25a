#include "signmix/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace signmix {

double smoothed_cross_entropy(std::span<const double> logits, std::span<const double> target, double epsilon) {
  const auto c = logits.size();
  double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double log_z = mx + std::log(z);
  double loss = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    double q = (1.0 - epsilon) * target[k] + epsilon / static_cast<double>(c);
    loss -= q * (logits[k] - log_z);
  }
  return loss;
}

std::vector<double> embed(const Model& model, std::span<const double> features) {
  const auto& enc = model.encoder();
  if (features.size() != enc.frames() * enc.input_dim()) throw std::invalid_argument("feature sequence has wrong size");
  std::vector<double> emb(enc.embed_dim()), tape(enc.tape_size());
  enc.forward(model.encoder_params(), features, emb, tape);
  return emb;
}

std::vector<double> head_logits(const Model& model, std::size_t head, std::span<const double> embedding) {
  const auto e = model.encoder().embed_dim();
  const auto c = model.heads().at(head).classes();
  auto params = model.params();
  const double* w = params.data() + model.head_weight_offset(head);
  const double* b = params.data() + model.head_bias_offset(head);
  std::vector<double> z(c);
  for (std::size_t k = 0; k < c; ++k) {
    double a = b[k];
    for (std::size_t j = 0; j < e; ++j) a += w[k * e + j] * embedding[j];
    z[k] = a;
  }
  return z;
}

namespace {

struct ItemResult {
  double ce = 0.0;
  double regr_sq = 0.0;
  std::vector<double> enc_grad;
  std::vector<double> head_grad;  // W then b
  std::vector<double> reg_grad;   // W then b
};

// Forward and (optionally) backward for one item. cls_scale and reg_scale are
// dL/d(ce_i) and dL/d(sum of squared errors of item i).
ItemResult run_item(const Model& model, const BatchItem& item, std::size_t head, bool regress, double cls_scale,
                    double reg_scale, bool want_grad, const LossOptions& opt) {
  const auto& enc = model.encoder();
  const auto e = enc.embed_dim();
  const auto c = model.heads()[head].classes();
  if (item.features.size() != enc.frames() * enc.input_dim()) {
    throw std::invalid_argument("item '" + item.sample_id + "' has wrong feature size");
  }
  if (item.target.size() != c) throw std::invalid_argument("item '" + item.sample_id + "' target size mismatch");

  ItemResult r;
  std::vector<double> emb(e), tape(enc.tape_size());
  enc.forward(model.encoder_params(), item.features, emb, tape);

  auto params = model.params();
  auto z = head_logits(model, head, emb);
  r.ce = smoothed_cross_entropy(z, item.target, opt.label_smoothing);

  const double* rw = params.data() + model.regression_offset();
  const double* rb = rw + Model::kRegressionOutputs * e;
  double out[2], y[2], diff[2];
  const double truth[2] = {item.boundary.start, item.boundary.end};
  if (regress) {
    for (std::size_t k = 0; k < 2; ++k) {
      double a = rb[k];
      for (std::size_t j = 0; j < e; ++j) a += rw[k * e + j] * emb[j];
      out[k] = a;
      y[k] = squash(a);
      diff[k] = y[k] - truth[k];
      r.regr_sq += diff[k] * diff[k];
    }
  }
  if (!want_grad) return r;

  // d(ce)/dz = softmax(z) - smoothed target
  std::vector<double> dz(c);
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    dz[k] = std::exp(z[k] - mx);
    sum += dz[k];
  }
  for (std::size_t k = 0; k < c; ++k) {
    double q = (1.0 - opt.label_smoothing) * item.target[k] + opt.label_smoothing / static_cast<double>(c);
    dz[k] = cls_scale * (dz[k] / sum - q);
  }

  std::vector<double> d_emb(e, 0.0);
  const double* hw = params.data() + model.head_weight_offset(head);
  r.head_grad.assign(c * (e + 1), 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < e; ++j) {
      r.head_grad[k * e + j] = dz[k] * emb[j];
      d_emb[j] += dz[k] * hw[k * e + j];
    }
    r.head_grad[c * e + k] = dz[k];
  }

  r.reg_grad.assign(Model::kRegressionOutputs * (e + 1), 0.0);
  if (regress) {
    for (std::size_t k = 0; k < 2; ++k) {
      // d squash(a)/da = (1 - y^2) / 2
      double g = reg_scale * 2.0 * diff[k] * 0.5 * (1.0 - y[k] * y[k]);
      (void)out[k];
      for (std::size_t j = 0; j < e; ++j) {
        r.reg_grad[k * e + j] = g * emb[j];
        d_emb[j] += g * rw[k * e + j];
      }
      r.reg_grad[2 * e + k] = g;
    }
  }

  if (opt.encoder_gradient) {
    r.enc_grad.assign(model.encoder_param_count(), 0.0);
    enc.backward(model.encoder_params(), item.features, tape, d_emb, r.enc_grad);
  }
  return r;
}

bool regresses(const LossOptions& opt, const LanguageTag& lang) {
  if (!opt.regression) return false;
  if (opt.regression_languages.empty()) return true;
  return std::find(opt.regression_languages.begin(), opt.regression_languages.end(), lang) !=
         opt.regression_languages.end();
}

struct Reduced {
  std::vector<ItemResult> items;
  double regression = 0.0;
};

Reduced run_batch(const Model& model, const MixedBatch& batch, const std::vector<std::size_t>& heads,
                  const LossOptions& opt, std::span<double> grad, Exec exec) {
  const auto n = batch.items.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  std::vector<char> reg(n);
  std::size_t n_reg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    reg[i] = regresses(opt, batch.items[i].language);
    n_reg += reg[i];
  }
  const double cls_scale = 1.0 / static_cast<double>(n);
  const double reg_scale = n_reg ? opt.regression_weight / (2.0 * static_cast<double>(n_reg)) : 0.0;
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != model.param_count()) throw std::invalid_argument("gradient buffer has wrong size");

  Reduced red;
  red.items.resize(n);
  if (exec == Exec::parallel) {
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      auto idx = static_cast<std::size_t>(i);
      red.items[idx] = run_item(model, batch.items[idx], heads[idx], reg[idx], cls_scale, reg_scale, want_grad, opt);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      red.items[i] = run_item(model, batch.items[i], heads[i], reg[i], cls_scale, reg_scale, want_grad, opt);
    }
  }

  double sq = 0.0;
  for (const auto& r : red.items) sq += r.regr_sq;
  red.regression = n_reg ? sq / (2.0 * static_cast<double>(n_reg)) : 0.0;

  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = red.items[i];
      for (std::size_t k = 0; k < r.enc_grad.size(); ++k) grad[k] += r.enc_grad[k];
      auto off = model.head_weight_offset(heads[i]);
      for (std::size_t k = 0; k < r.head_grad.size(); ++k) grad[off + k] += r.head_grad[k];
      off = model.regression_offset();
      for (std::size_t k = 0; k < r.reg_grad.size(); ++k) grad[off + k] += r.reg_grad[k];
    }
  }
  return red;
}

LossReport empty_report(const Model& model) {
  LossReport rep;
  for (const auto& h : model.heads()) rep.languages.push_back(h.language);
  rep.cls.assign(model.heads().size(), 0.0);
  rep.weights.assign(model.heads().size(), 0.0);
  rep.counts.assign(model.heads().size(), 0);
  return rep;
}

}  // namespace

LossReport cotrain_loss(const Model& model, const MixedBatch& batch, const LossOptions& opt, std::span<double> grad,
                        Exec exec) {
  std::vector<std::size_t> heads;
  heads.reserve(batch.items.size());
  for (const auto& item : batch.items) heads.push_back(model.head_index(item.language));
  auto red = run_batch(model, batch, heads, opt, grad, exec);

  auto rep = empty_report(model);
  std::vector<double> sums(model.heads().size(), 0.0);
  for (std::size_t i = 0; i < heads.size(); ++i) {
    sums[heads[i]] += red.items[i].ce;
    rep.counts[heads[i]] += 1;
  }
  const double n = static_cast<double>(batch.items.size());
  for (std::size_t h = 0; h < sums.size(); ++h) {
    if (rep.counts[h] == 0) continue;
    rep.cls[h] = sums[h] / static_cast<double>(rep.counts[h]);
    rep.weights[h] = static_cast<double>(rep.counts[h]) / n;
    rep.total += rep.weights[h] * rep.cls[h];
  }
  rep.regression = red.regression;
  rep.total += opt.regression_weight * rep.regression;
  return rep;
}

LossReport plain_loss(const Model& model, const MixedBatch& batch, std::size_t head, const LossOptions& opt,
                      std::span<double> grad, Exec exec) {
  if (head >= model.heads().size()) throw std::invalid_argument("head index out of range");
  std::vector<std::size_t> heads(batch.items.size(), head);
  auto red = run_batch(model, batch, heads, opt, grad, exec);
  auto rep = empty_report(model);
  double sum = 0.0;
  for (const auto& r : red.items) sum += r.ce;
  rep.counts[head] = batch.items.size();
  rep.cls[head] = sum / static_cast<double>(batch.items.size());
  rep.weights[head] = 1.0;
  rep.regression = red.regression;
  rep.total = rep.cls[head] + opt.regression_weight * rep.regression;
  return rep;
}

std::vector<std::size_t> predict(const Model& model, std::size_t head,
                                 const std::vector<std::vector<double>>& features, Exec exec) {
  std::vector<std::size_t> out(features.size());
  auto one = [&](std::size_t i) {
    auto z = head_logits(model, head, embed(model, features[i]));
    out[i] = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  };
  const auto count = static_cast<std::int64_t>(features.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) one(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < features.size(); ++i) one(i);
  }
  return out;
}

std::vector<std::vector<double>> embed_all(const Model& model, const std::vector<std::vector<double>>& features,
                                           Exec exec) {
  std::vector<std::vector<double>> out(features.size());
  const auto count = static_cast<std::int64_t>(features.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = embed(model, features[static_cast<std::size_t>(i)]);
  } else {
    for (std::size_t i = 0; i < features.size(); ++i) out[i] = embed(model, features[i]);
  }
  return out;
}

}  // namespace signmix
