#include "signmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace signmix {

std::size_t Encoder::param_count() const {
  std::size_t n = 0;
  for (const auto& t : layout()) n += t.size();
  return n;
}

MlpEncoder::MlpEncoder(std::size_t frames, std::size_t input_dim, std::size_t hidden_dim, std::size_t embed_dim)
    : frames_(frames), input_(input_dim), hidden_(hidden_dim), embed_(embed_dim) {
  if (!frames_ || !input_ || !hidden_ || !embed_) throw std::invalid_argument("encoder dimensions must be positive");
}

std::vector<TensorInfo> MlpEncoder::layout() const {
  std::vector<TensorInfo> out;
  std::size_t off = 0;
  out.push_back({"encoder.w1", hidden_, input_, off});
  off += hidden_ * input_;
  out.push_back({"encoder.b1", hidden_, 1, off});
  off += hidden_;
  out.push_back({"encoder.w2", embed_, hidden_, off});
  off += embed_ * hidden_;
  out.push_back({"encoder.b2", embed_, 1, off});
  return out;
}

namespace {

void uniform_init(std::span<double> w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  for (auto& x : w) x = u(rng);
}

}  // namespace

void MlpEncoder::init(std::span<double> params, Rng& rng) const {
  auto l = layout();
  uniform_init(params.subspan(l[0].offset, l[0].size()), input_, hidden_, rng);
  std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(l[1].offset), l[1].size(), 0.0);
  uniform_init(params.subspan(l[2].offset, l[2].size()), hidden_, embed_, rng);
  std::fill_n(params.begin() + static_cast<std::ptrdiff_t>(l[3].offset), l[3].size(), 0.0);
}

void MlpEncoder::forward(std::span<const double> params, std::span<const double> seq, std::span<double> embedding,
                         std::span<double> tape) const {
  const double* w1 = params.data();
  const double* b1 = w1 + hidden_ * input_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + embed_ * hidden_;
  double* h1_all = tape.data();
  double* h2_all = tape.data() + frames_ * hidden_;
  std::fill(embedding.begin(), embedding.end(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(frames_);

  for (std::size_t t = 0; t < frames_; ++t) {
    const double* x = seq.data() + t * input_;
    double* h1 = h1_all + t * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) {
      const double* row = w1 + j * input_;
      double a = b1[j];
      for (std::size_t k = 0; k < input_; ++k) a += row[k] * x[k];
      h1[j] = std::tanh(a);
    }
    double* h2 = h2_all + t * embed_;
    for (std::size_t e = 0; e < embed_; ++e) {
      const double* row = w2 + e * hidden_;
      double a = b2[e];
      for (std::size_t j = 0; j < hidden_; ++j) a += row[j] * h1[j];
      h2[e] = std::tanh(a);
      embedding[e] += h2[e] * inv_t;
    }
  }
}

void MlpEncoder::backward(std::span<const double> params, std::span<const double> seq, std::span<const double> tape,
                          std::span<const double> d_embedding, std::span<double> d_params) const {
  const double* w2 = params.data() + hidden_ * input_ + hidden_;
  double* dw1 = d_params.data();
  double* db1 = dw1 + hidden_ * input_;
  double* dw2 = db1 + hidden_;
  double* db2 = dw2 + embed_ * hidden_;
  const double* h1_all = tape.data();
  const double* h2_all = tape.data() + frames_ * hidden_;
  const double inv_t = 1.0 / static_cast<double>(frames_);

  std::vector<double> d_a2(embed_), d_h1(hidden_);
  for (std::size_t t = 0; t < frames_; ++t) {
    const double* x = seq.data() + t * input_;
    const double* h1 = h1_all + t * hidden_;
    const double* h2 = h2_all + t * embed_;
    for (std::size_t e = 0; e < embed_; ++e) d_a2[e] = d_embedding[e] * inv_t * (1.0 - h2[e] * h2[e]);
    std::fill(d_h1.begin(), d_h1.end(), 0.0);
    for (std::size_t e = 0; e < embed_; ++e) {
      const double g = d_a2[e];
      const double* row = w2 + e * hidden_;
      double* drow = dw2 + e * hidden_;
      for (std::size_t j = 0; j < hidden_; ++j) {
        drow[j] += g * h1[j];
        d_h1[j] += g * row[j];
      }
      db2[e] += g;
    }
    for (std::size_t j = 0; j < hidden_; ++j) {
      const double g = d_h1[j] * (1.0 - h1[j] * h1[j]);
      double* drow = dw1 + j * input_;
      for (std::size_t k = 0; k < input_; ++k) drow[k] += g * x[k];
      db1[j] += g;
    }
  }
}

Model::Model(std::shared_ptr<const Encoder> encoder, std::vector<HeadSpec> heads)
    : encoder_(std::move(encoder)), heads_(std::move(heads)) {
  if (!encoder_) throw std::invalid_argument("model needs an encoder");
  if (heads_.empty()) throw std::invalid_argument("model needs at least one head");
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    if (heads_[i].classes() == 0) throw std::invalid_argument("head '" + heads_[i].language.code + "' has no classes");
    for (std::size_t j = 0; j < i; ++j) {
      if (heads_[j].language == heads_[i].language) {
        throw std::invalid_argument("duplicate head for language '" + heads_[i].language.code + "'");
      }
    }
  }
  encoder_size_ = encoder_->param_count();
  std::size_t off = encoder_size_;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    head_offsets_.push_back(off);
    off += head_param_count(h);
  }
  regression_offset_ = off;
  off += kRegressionOutputs * (encoder_->embed_dim() + 1);
  params_.assign(off, 0.0);
}

std::size_t Model::head_index(const LanguageTag& language) const {
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    if (heads_[h].language == language) return h;
  }
  throw std::invalid_argument("no head for language '" + language.code + "'");
}

std::vector<TensorInfo> Model::layout() const {
  auto out = encoder_->layout();
  const auto e = encoder_->embed_dim();
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const auto c = heads_[h].classes();
    out.push_back({"head." + heads_[h].language.code + ".w", c, e, head_weight_offset(h)});
    out.push_back({"head." + heads_[h].language.code + ".b", c, 1, head_bias_offset(h)});
  }
  out.push_back({"regression.w", kRegressionOutputs, e, regression_offset_});
  out.push_back({"regression.b", kRegressionOutputs, 1, regression_offset_ + kRegressionOutputs * e});
  return out;
}

void Model::init(Rng& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  encoder_->init(encoder_params(), rng);
  const auto e = encoder_->embed_dim();
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    uniform_init(std::span<double>(params_).subspan(head_weight_offset(h), heads_[h].classes() * e), e,
                 heads_[h].classes(), rng);
  }
  uniform_init(std::span<double>(params_).subspan(regression_offset_, kRegressionOutputs * e), e,
               kRegressionOutputs, rng);
}

std::size_t Model::load_weights_from(const Model& source, bool copy_heads) {
  if (source.encoder().kind() != encoder_->kind() || source.encoder_param_count() != encoder_size_ ||
      source.encoder().embed_dim() != encoder_->embed_dim() || source.encoder().input_dim() != encoder_->input_dim()) {
    throw std::invalid_argument("source encoder is incompatible");
  }
  std::copy_n(source.params_.begin(), encoder_size_, params_.begin());
  std::size_t copied = 0;
  if (copy_heads) {
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      for (std::size_t s = 0; s < source.heads_.size(); ++s) {
        if (source.heads_[s] == heads_[h]) {
          std::copy_n(source.params_.begin() + static_cast<std::ptrdiff_t>(source.head_weight_offset(s)),
                      head_param_count(h), params_.begin() + static_cast<std::ptrdiff_t>(head_weight_offset(h)));
          ++copied;
        }
      }
    }
    std::copy_n(source.params_.begin() + static_cast<std::ptrdiff_t>(source.regression_offset_),
                kRegressionOutputs * (encoder_->embed_dim() + 1),
                params_.begin() + static_cast<std::ptrdiff_t>(regression_offset_));
  }
  return copied;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, const std::string& config_hash) {
  const auto* mlp = dynamic_cast<const MlpEncoder*>(&model.encoder());
  if (!mlp) throw std::invalid_argument("only the mlp encoder can be checkpointed");
  std::vector<Record> out;
  out.push_back(Record("checkpoint")
                    .add("version", 1)
                    .add("encoder", mlp->kind())
                    .add("frames", mlp->frames())
                    .add("input_dim", mlp->input_dim())
                    .add("hidden_dim", mlp->hidden_dim())
                    .add("embed_dim", mlp->embed_dim())
                    .add("heads", model.heads().size())
                    .add("config_hash", config_hash));
  for (const auto& h : model.heads()) {
    out.push_back(Record("head").add("language", h.language.code).add("classes", h.classes()).add_list("labels", h.labels));
  }
  auto params = model.params();
  for (const auto& t : model.layout()) {
    std::vector<double> values(params.begin() + static_cast<std::ptrdiff_t>(t.offset),
                               params.begin() + static_cast<std::ptrdiff_t>(t.offset + t.size()));
    out.push_back(Record("tensor").add("name", t.name).add("rows", t.rows).add("cols", t.cols).add_doubles("values", values));
  }
  write_records(path, out);
}

Model load_checkpoint(const std::filesystem::path& path, std::string* config_hash) {
  auto records = read_records(path);
  if (records.empty() || records.front().record.kind() != "checkpoint") {
    throw ParseError(records.empty() ? 0 : records.front().line, "missing checkpoint header");
  }
  const auto& [hline, head] = records.front();
  std::shared_ptr<const Encoder> encoder;
  std::size_t head_count = 0;
  try {
    head.expect_fields({"version", "encoder", "frames", "input_dim", "hidden_dim", "embed_dim", "heads", "config_hash"});
    if (head.get("encoder") != "mlp") throw std::invalid_argument("unsupported encoder '" + head.get("encoder") + "'");
    encoder = std::make_shared<MlpEncoder>(
        static_cast<std::size_t>(head.get_int("frames")), static_cast<std::size_t>(head.get_int("input_dim")),
        static_cast<std::size_t>(head.get_int("hidden_dim")), static_cast<std::size_t>(head.get_int("embed_dim")));
    head_count = static_cast<std::size_t>(head.get_int("heads"));
    if (config_hash) *config_hash = head.get("config_hash");
  } catch (const std::invalid_argument& e) {
    throw ParseError(hline, e.what());
  }
  std::vector<HeadSpec> heads;
  std::size_t i = 1;
  for (; i < records.size() && heads.size() < head_count; ++i) {
    const auto& [line, rec] = records[i];
    try {
      if (rec.kind() != "head") throw std::invalid_argument("expected 'head' record");
      rec.expect_fields({"language", "classes", "labels"});
      HeadSpec h{{rec.get("language")}, rec.get_list("labels")};
      if (h.classes() != static_cast<std::size_t>(rec.get_int("classes"))) {
        throw std::invalid_argument("head label count differs from classes");
      }
      heads.push_back(std::move(h));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  Model model(encoder, std::move(heads));
  auto layout = model.layout();
  std::size_t tensor = 0;
  for (; i < records.size(); ++i) {
    const auto& [line, rec] = records[i];
    try {
      if (rec.kind() != "tensor") throw std::invalid_argument("expected 'tensor' record");
      rec.expect_fields({"name", "rows", "cols", "values"});
      if (tensor >= layout.size()) throw std::invalid_argument("unexpected extra tensor");
      const auto& t = layout[tensor++];
      if (rec.get("name") != t.name || static_cast<std::size_t>(rec.get_int("rows")) != t.rows ||
          static_cast<std::size_t>(rec.get_int("cols")) != t.cols) {
        throw std::invalid_argument("tensor '" + rec.get("name") + "' does not match expected '" + t.name + "'");
      }
      auto values = rec.get_doubles("values");
      if (values.size() != t.size()) throw std::invalid_argument("tensor '" + t.name + "' has wrong value count");
      std::copy(values.begin(), values.end(), model.params().begin() + static_cast<std::ptrdiff_t>(t.offset));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  if (tensor != layout.size()) throw ParseError(records.back().line, "checkpoint is missing tensors");
  return model;
}

}  // namespace signmix
