#include "signmix/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace signmix {

AdamW::AdamW(std::size_t size, AdamWConfig cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0), trainable_(size, true) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw std::invalid_argument("AdamW betas must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0) || cfg.weight_decay < 0.0) throw std::invalid_argument("invalid AdamW eps or weight decay");
}

void AdamW::set_trainable(std::vector<bool> trainable) {
  if (trainable.size() != m_.size()) throw std::invalid_argument("trainable mask has wrong size");
  trainable_ = std::move(trainable);
}

void AdamW::freeze_range(std::size_t begin, std::size_t end) {
  if (begin > end || end > m_.size()) throw std::out_of_range("freeze range outside the parameter vector");
  for (auto i = begin; i < end; ++i) trainable_[i] = false;
}

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("AdamW size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!trainable_[i]) continue;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * params[i]);
  }
}

}  // namespace signmix
