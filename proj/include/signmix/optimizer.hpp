#pragma once

// AdamW with decoupled weight decay. A per-parameter mask freezes entries:
// masked parameters and their moments are never touched.

#include <cstdint>
#include <span>
#include <vector>

namespace signmix {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

class AdamW {
 public:
  AdamW(std::size_t size, AdamWConfig cfg = {});

  // Entries with trainable[i] == false are left bit-identical by step().
  void set_trainable(std::vector<bool> trainable);
  void freeze_range(std::size_t begin, std::size_t end);

  void step(std::span<double> params, std::span<const double> grad, double lr);

  std::int64_t steps() const noexcept { return t_; }
  const AdamWConfig& config() const noexcept { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_, v_;
  std::vector<bool> trainable_;
  std::int64_t t_ = 0;
};

}  // namespace signmix
