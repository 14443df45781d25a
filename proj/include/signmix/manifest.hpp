#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "signmix/record.hpp"

namespace signmix {

struct LanguageTag {
  std::string code;
  auto operator<=>(const LanguageTag&) const = default;
};

struct SignerId {
  std::string id;
  auto operator<=>(const SignerId&) const = default;
};

struct GlossLabel {
  std::string id;
  LanguageTag language;
  auto operator<=>(const GlossLabel&) const = default;
};

// Member gloss ids kept sorted.
struct GroupLabel {
  std::string id;
  std::vector<std::string> members;
  auto operator<=>(const GroupLabel&) const = default;
};

enum class Subset { unassigned, train, test };

const char* to_string(Subset s);
Subset subset_from_string(const std::string& s);

// Boundaries are half-open frame intervals [sign_start, sign_end).
struct SampleRecord {
  std::string sample_id;
  SignerId signer;
  std::string gloss;
  LanguageTag language;
  int video_length = 1;
  int sign_start = 0;
  int sign_end = 1;
  Subset subset = Subset::unassigned;
  auto operator<=>(const SampleRecord&) const = default;
};

struct DatasetManifest {
  LanguageTag language;
  std::vector<GlossLabel> glosses;
  std::vector<GroupLabel> groups;  // empty: no grouping recorded
  std::vector<SignerId> signers;
  std::vector<SampleRecord> samples;

  bool operator==(const DatasetManifest&) const = default;

  bool has_grouping() const noexcept { return !groups.empty(); }

  // Throws IntegrityError naming the first violated invariant.
  void validate() const;

  // Every list sorted by id; group member lists sorted.
  DatasetManifest canonical() const;
};

// File format (one record per line, fields in exactly this order):
//   manifest version=1 language=<tag>
//   gloss id=<id> language=<tag>
//   group id=<id> members=<gloss>,<gloss>,...
//   signer id=<id>
//   sample id=<id> signer=<id> gloss=<id> language=<tag> video_length=<n>
//          sign_start=<frame> sign_end=<frame> subset=train|test|unassigned
// The header comes first; other records may appear in any order.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::vector<NumberedRecord>& records);

// Writes the canonical form, so repeated saves are byte-identical.
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
std::vector<Record> manifest_records(const DatasetManifest& m);

Record group_record(const GroupLabel& g);

// Gloss id -> containing group id. Without a recorded grouping every gloss is
// its own group.
std::vector<std::string> project_to_groups(const DatasetManifest& m, std::span<const std::string> labels);

// Sorted, de-duplicated label vocabulary with O(1) lookup.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool contains(const std::string& label) const { return index_.count(label) != 0; }
  // Throws std::out_of_range for unknown labels.
  std::size_t index(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class LabelMode { gloss, group };

LabelSpace gloss_space(const DatasetManifest& m);
LabelSpace group_space(const DatasetManifest& m);

// Class index of every sample, in manifest sample order, under the given mode.
std::vector<std::size_t> sample_classes(const DatasetManifest& m, LabelMode mode, const LabelSpace& space);

std::vector<SampleRecord> samples_in(const DatasetManifest& m, Subset subset);

}  // namespace signmix
