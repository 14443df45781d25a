#pragma once

// Evaluation: top-1 accuracy, VSSign breakdown on grouped labels, the
// cross-lingual label-mapping baseline and k-shot train-set truncation.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "signmix/manifest.hpp"

namespace signmix {

inline constexpr std::size_t kNoLabel = std::numeric_limits<std::size_t>::max();

struct PredictionRow {
  std::string sample_id;
  std::size_t predicted = 0;  // index into PredictionSet::predicted_space, or kNoLabel
  std::size_t truth = 0;      // index into PredictionSet::truth_space
  LanguageTag language;
  bool operator==(const PredictionRow&) const = default;
};

// Predicted and true classes may live in different vocabularies (a source
// classifier scored against target labels); correctness compares label text.
struct PredictionSet {
  std::vector<PredictionRow> rows;
  LabelSpace predicted_space;
  LabelSpace truth_space;

  std::string predicted_label(std::size_t row) const;  // "" for kNoLabel
  const std::string& truth_label(std::size_t row) const { return truth_space.label(rows.at(row).truth); }
  bool correct(std::size_t row) const;

  // Throws std::invalid_argument on duplicate sample ids or bad indices.
  void validate() const;
};

// Both vocabularies equal `space`.
PredictionSet make_predictions(const std::vector<SampleRecord>& samples, const std::vector<std::size_t>& predicted,
                               const std::vector<std::size_t>& truth, const LabelSpace& space);

// Throws std::invalid_argument on an empty set.
double top1_accuracy(const PredictionSet& p);

struct Stratum {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(total); }
};

struct Breakdown {
  Stratum whole;
  std::optional<Stratum> non_vssign;  // empty stratum -> not applicable
  std::optional<Stratum> vssign;
};

// Projects predicted and true gloss labels onto groups; the VSSign stratum is
// samples whose true group has at least two members. Throws
// std::invalid_argument if the manifest has no grouping.
Breakdown grouped_accuracy_breakdown(const PredictionSet& p, const DatasetManifest& m);

struct LabelMapEntry {
  std::string target;
  std::size_t votes = 0;    // samples with the chosen target
  std::size_t support = 0;  // samples assigned this source class
  bool tie = false;         // another target had the same count
  bool operator==(const LabelMapEntry&) const = default;
};

struct LabelMap {
  std::map<std::string, LabelMapEntry> entries;  // keyed by source label
  bool operator==(const LabelMap&) const = default;
};

// Mode of the true target label per predicted source label, ties to the
// lexicographically smallest target. Throws on an empty set.
LabelMap build_label_map(const PredictionSet& source_preds);

// Replaces source predictions by mapped target labels. Unmapped classes, or
// targets outside the truth vocabulary, become kNoLabel and score incorrect.
PredictionSet apply_label_map(const LabelMap& map, const PredictionSet& preds);

// Keeps at most k train samples per gloss, chosen uniformly without
// replacement; other train samples are removed and test samples untouched.
DatasetManifest kshot_truncate(const DatasetManifest& m, int k, std::uint64_t seed);

// prediction sample=<id> language=<tag> predicted=<label> truth=<label>
std::vector<Record> prediction_records(const PredictionSet& p);
void save_predictions(const PredictionSet& p, const std::filesystem::path& path);
// Vocabularies are the observed labels unless given.
PredictionSet load_predictions(const std::filesystem::path& path, const LabelSpace* predicted_space = nullptr,
                               const LabelSpace* truth_space = nullptr);

std::vector<Record> label_map_records(const LabelMap& map);
void save_label_map(const LabelMap& map, const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path);

Record breakdown_record(const Breakdown& b);

}  // namespace signmix
