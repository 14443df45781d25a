#include "signmix/features.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "signmix/record.hpp"

namespace signmix {

static_assert(std::endian::native == std::endian::little, "feature files are little-endian float64");

void FeatureStore::add(const std::string& sample_id, std::span<const double> frames) {
  if (dim_ == 0) throw std::invalid_argument("feature store has zero dimension");
  if (frames.empty() || frames.size() % dim_ != 0) {
    throw std::invalid_argument("feature block for '" + sample_id + "' is not a whole number of frames");
  }
  if (contains(sample_id)) throw std::invalid_argument("duplicate feature block for '" + sample_id + "'");
  entries_.emplace(sample_id, Entry{data_.size() / dim_, frames.size() / dim_});
  data_.insert(data_.end(), frames.begin(), frames.end());
}

std::size_t FeatureStore::frame_count(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::out_of_range("no features for sample '" + id + "'");
  return it->second.frames;
}

std::span<const double> FeatureStore::frames(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::out_of_range("no features for sample '" + id + "'");
  return {data_.data() + it->second.offset * dim_, it->second.frames * dim_};
}

void FeatureStore::gather(const std::string& id, std::span<const int> indices, std::span<double> out) const {
  auto block = frames(id);
  const auto count = block.size() / dim_;
  if (out.size() != indices.size() * dim_) throw std::invalid_argument("gather output has wrong size");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto f = static_cast<std::size_t>(indices[i]);
    if (indices[i] < 0 || f >= count) throw std::out_of_range("frame index out of range for '" + id + "'");
    std::copy_n(block.data() + f * dim_, dim_, out.data() + i * dim_);
  }
}

std::vector<std::string> FeatureStore::sample_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, e] : entries_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void FeatureStore::merge(const FeatureStore& other) {
  if (dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) throw std::invalid_argument("feature dimension mismatch in merge");
  for (const auto& id : other.sample_ids()) add(id, other.frames(id));
}

void FeatureStore::save(const std::filesystem::path& base) const {
  auto bin_path = base;
  bin_path += ".bin";
  auto idx_path = base;
  idx_path += ".idx";
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + bin_path.string());
  std::vector<Record> idx;
  idx.push_back(Record("features")
                    .add("version", 1)
                    .add("dim", dim_)
                    .add("samples", entries_.size())
                    .add("frames", data_.size() / std::max<std::size_t>(dim_, 1)));
  std::size_t offset = 0;
  for (const auto& id : sample_ids()) {
    auto block = frames(id);
    bin.write(reinterpret_cast<const char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
    idx.push_back(Record("feature").add("sample", id).add("offset", offset).add("frames", block.size() / dim_));
    offset += block.size() / dim_;
  }
  bin.flush();
  if (!bin) throw IoError("write failed for " + bin_path.string());
  write_records(idx_path, idx);
}

FeatureStore FeatureStore::load(const std::filesystem::path& base) {
  auto bin_path = base;
  bin_path += ".bin";
  auto idx_path = base;
  idx_path += ".idx";
  auto records = read_records(idx_path);
  if (records.empty() || records.front().record.kind() != "features") {
    throw ParseError(records.empty() ? 0 : records.front().line, "missing features header");
  }
  const auto& head = records.front().record;
  std::size_t dim = 0, total = 0;
  try {
    head.expect_fields({"version", "dim", "samples", "frames"});
    dim = static_cast<std::size_t>(head.get_int("dim"));
    total = static_cast<std::size_t>(head.get_int("frames"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(records.front().line, e.what());
  }
  std::vector<double> data(total * dim);
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path.string());
  bin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double))) {
    throw IoError("feature file " + bin_path.string() + " is truncated");
  }
  FeatureStore store(dim);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& [line, rec] = records[i];
    try {
      if (rec.kind() != "feature") throw std::invalid_argument("expected 'feature' record");
      rec.expect_fields({"sample", "offset", "frames"});
      auto offset = static_cast<std::size_t>(rec.get_int("offset"));
      auto frames = static_cast<std::size_t>(rec.get_int("frames"));
      if (offset + frames > total) throw std::invalid_argument("feature block beyond end of data");
      store.add(rec.get("sample"), std::span<const double>(data.data() + offset * dim, frames * dim));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return store;
}

}  // namespace signmix
