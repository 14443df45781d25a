#pragma once

// Per-frame feature vectors for every sample of one or more manifests.
//
// On disk: <base>.bin holds raw little-endian float64 frames back to back;
// <base>.idx is a record file
//   features version=1 dim=<d> samples=<n> frames=<total>
//   feature sample=<id> offset=<first frame> frames=<count>
// sorted by sample id.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace signmix {

class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& id) const { return entries_.count(id) != 0; }

  // frames.size() must be a positive multiple of dim().
  void add(const std::string& sample_id, std::span<const double> frames);

  std::size_t frame_count(const std::string& id) const;
  std::span<const double> frames(const std::string& id) const;

  // Copies the requested frames into out (indices.size() * dim values).
  void gather(const std::string& id, std::span<const int> indices, std::span<double> out) const;

  void save(const std::filesystem::path& base) const;
  static FeatureStore load(const std::filesystem::path& base);

  // Adds every entry of `other` (dimensions must agree).
  void merge(const FeatureStore& other);

  std::vector<std::string> sample_ids() const;

 private:
  struct Entry {
    std::size_t offset;  // in frames
    std::size_t frames;
  };
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Entry> entries_;
  std::vector<double> data_;
};

}  // namespace signmix
