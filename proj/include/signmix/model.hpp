#pragma once

// Shared encoder, one classification head per language and a two-output
// boundary-regression head, all stored in one flat parameter vector:
//
//   [ encoder | head 0 (W, b) | head 1 (W, b) | ... | regression (W, b) ]

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "signmix/clip.hpp"
#include "signmix/manifest.hpp"

namespace signmix {

struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const noexcept { return rows * cols; }
};

// Maps a [frames x input_dim] feature sequence to an embedding. Parameters
// live outside the encoder; `tape` holds activations for backward().
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t frames() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t embed_dim() const = 0;
  virtual std::vector<TensorInfo> layout() const = 0;
  virtual std::size_t tape_size() const = 0;

  virtual void init(std::span<double> params, Rng& rng) const = 0;
  virtual void forward(std::span<const double> params, std::span<const double> seq, std::span<double> embedding,
                       std::span<double> tape) const = 0;
  // Accumulates into d_params.
  virtual void backward(std::span<const double> params, std::span<const double> seq, std::span<const double> tape,
                        std::span<const double> d_embedding, std::span<double> d_params) const = 0;

  std::size_t param_count() const;
};

// Per-frame two-layer tanh perceptron followed by temporal mean pooling.
class MlpEncoder final : public Encoder {
 public:
  MlpEncoder(std::size_t frames, std::size_t input_dim, std::size_t hidden_dim, std::size_t embed_dim);

  std::string kind() const override { return "mlp"; }
  std::size_t frames() const override { return frames_; }
  std::size_t input_dim() const override { return input_; }
  std::size_t embed_dim() const override { return embed_; }
  std::size_t hidden_dim() const { return hidden_; }
  std::vector<TensorInfo> layout() const override;
  std::size_t tape_size() const override { return frames_ * (hidden_ + embed_); }

  void init(std::span<double> params, Rng& rng) const override;
  void forward(std::span<const double> params, std::span<const double> seq, std::span<double> embedding,
               std::span<double> tape) const override;
  void backward(std::span<const double> params, std::span<const double> seq, std::span<const double> tape,
                std::span<const double> d_embedding, std::span<double> d_params) const override;

 private:
  std::size_t frames_, input_, hidden_, embed_;
};

struct HeadSpec {
  LanguageTag language;
  std::vector<std::string> labels;  // class index -> label
  std::size_t classes() const noexcept { return labels.size(); }
  bool operator==(const HeadSpec&) const = default;
};

class Model {
 public:
  Model(std::shared_ptr<const Encoder> encoder, std::vector<HeadSpec> heads);

  const Encoder& encoder() const noexcept { return *encoder_; }
  std::shared_ptr<const Encoder> encoder_ptr() const noexcept { return encoder_; }
  const std::vector<HeadSpec>& heads() const noexcept { return heads_; }
  std::size_t head_index(const LanguageTag& language) const;  // throws std::invalid_argument

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::size_t encoder_param_count() const noexcept { return encoder_size_; }
  std::span<const double> encoder_params() const { return {params_.data(), encoder_size_}; }
  std::span<double> encoder_params() { return {params_.data(), encoder_size_}; }

  // Offsets of head h's weight matrix [classes x embed] and bias [classes].
  std::size_t head_weight_offset(std::size_t h) const { return head_offsets_.at(h); }
  std::size_t head_bias_offset(std::size_t h) const {
    return head_offsets_.at(h) + heads_.at(h).classes() * encoder_->embed_dim();
  }
  std::size_t head_param_count(std::size_t h) const { return heads_.at(h).classes() * (encoder_->embed_dim() + 1); }
  std::size_t regression_offset() const noexcept { return regression_offset_; }
  static constexpr std::size_t kRegressionOutputs = 2;

  std::vector<TensorInfo> layout() const;

  void init(Rng& rng);

  // Copies encoder weights, and head weights for heads whose language and
  // labels match, from `source`. Returns the number of heads copied.
  std::size_t load_weights_from(const Model& source, bool copy_heads = true);

 private:
  std::shared_ptr<const Encoder> encoder_;
  std::vector<HeadSpec> heads_;
  std::vector<std::size_t> head_offsets_;
  std::size_t encoder_size_ = 0;
  std::size_t regression_offset_ = 0;
  std::vector<double> params_;
};

// Self-describing record file: header with dimensions and config hash, one
// record per head with its labels, one record per named tensor.
void save_checkpoint(const Model& model, const std::filesystem::path& path, const std::string& config_hash);
Model load_checkpoint(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace signmix
