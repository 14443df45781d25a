#pragma once

// Visually-similar-sign grouping: candidate pairs from template confidences,
// expert vote aggregation, transitive merging and confusion-driven refinement.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "signmix/manifest.hpp"

namespace signmix {

// Square table of class-confidence rows: row i is the classifier's confidence
// vector for the template (or validation samples) of labels[i].
struct TemplateScoreTable {
  std::vector<std::string> labels;
  std::vector<double> scores;  // row-major, labels.size()^2

  std::size_t size() const noexcept { return labels.size(); }
  double at(std::size_t row, std::size_t col) const { return scores[row * labels.size() + col]; }
  double& at(std::size_t row, std::size_t col) { return scores[row * labels.size() + col]; }

  // Throws std::invalid_argument unless square with rows summing to 1 within 1e-6.
  void validate() const;
};

// Rows are cosine similarities of embeddings shifted to [0, 2] and normalised.
TemplateScoreTable cosine_score_table(std::vector<std::string> labels, std::span<const double> embeddings,
                                      std::size_t dim);

// Row-normalised confusion by true class; rows without samples put all mass
// on the diagonal.
TemplateScoreTable confusion_table(std::vector<std::string> labels, std::span<const std::size_t> truth,
                                   std::span<const std::size_t> predicted);

TemplateScoreTable load_score_table(const std::filesystem::path& path);
void save_score_table(const TemplateScoreTable& t, const std::filesystem::path& path);

enum class PairSource { template_similarity, confusion_refinement };
const char* to_string(PairSource s);
PairSource pair_source_from_string(const std::string& s);

struct PairKey {
  std::string a;  // a < b
  std::string b;
  auto operator<=>(const PairKey&) const = default;
};
PairKey make_pair_key(std::string x, std::string y);

struct CandidatePair {
  PairKey key;
  int rank = 1;
  PairSource source = PairSource::template_similarity;
  auto operator<=>(const CandidatePair&) const = default;
};

// For every row the k largest off-diagonal confidences (ties to the lower
// column) become pairs. Duplicates keep their best rank. Output ordered by
// (rank, a, b).
std::vector<CandidatePair> candidate_pairs_from_templates(const TemplateScoreTable& t, std::size_t k = 10);
std::vector<CandidatePair> candidate_pairs_from_templates_serial(const TemplateScoreTable& t, std::size_t k = 10);

struct VoteRecord {
  PairKey pair;
  std::string expert;
  bool verdict = false;  // true: the signs differ only in non-manual components
  std::int64_t timestamp = 0;
  bool operator==(const VoteRecord&) const = default;
};

Record vote_record(const VoteRecord& v);
VoteRecord vote_from_record(const Record& r);
std::vector<VoteRecord> load_votes(const std::filesystem::path& path);

enum class Adjudication { matched, rejected, pending };
const char* to_string(Adjudication a);

struct PairOutcome {
  PairKey pair;
  std::size_t votes = 0;
  std::size_t true_votes = 0;
  Adjudication status = Adjudication::pending;
  bool matched() const noexcept { return status == Adjudication::matched; }
  bool operator==(const PairOutcome&) const = default;
};

// Matched iff at least `quorum` verdicts are recorded and at least `majority`
// of them are true. Throws std::invalid_argument on a repeated (pair, expert).
std::vector<PairOutcome> aggregate_votes(std::span<const VoteRecord> votes, std::size_t quorum = 5,
                                         std::size_t majority = 3);

class GroupingState {
 public:
  GroupingState() = default;
  // Every gloss starts in its own group, or in its manifest group when one is recorded.
  explicit GroupingState(const DatasetManifest& m);
  explicit GroupingState(std::vector<std::string> glosses);

  std::size_t gloss_count() const noexcept { return glosses_.size(); }
  const std::vector<std::string>& glosses() const noexcept { return glosses_; }
  std::size_t group_count() const;

  // Accepts a gloss id or a current group id.
  std::size_t resolve(const std::string& label) const;
  std::size_t find(std::size_t gloss) const;
  bool same_group(const std::string& x, const std::string& y) const;

  // Groups named by their lexicographically smallest member, ordered by id.
  std::vector<GroupLabel> groups() const;

  std::deque<CandidatePair>& pending() noexcept { return pending_; }
  const std::deque<CandidatePair>& pending() const noexcept { return pending_; }
  std::vector<VoteRecord>& votes() noexcept { return votes_; }
  const std::vector<VoteRecord>& votes() const noexcept { return votes_; }
  int round() const noexcept { return round_; }
  void set_round(int r) noexcept { round_ = r; }

  // Queues pairs whose sides are not already merged.
  void enqueue(std::span<const CandidatePair> pairs);

  void unite(std::size_t x, std::size_t y);
  void drop_merged_pending();

 private:
  std::vector<std::string> glosses_;  // sorted
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> group_alias_;  // manifest group ids
  mutable std::vector<std::size_t> parent_;
  std::deque<CandidatePair> pending_;
  std::vector<VoteRecord> votes_;
  int round_ = 0;
};

// Groups become the connected components of the matched-pair graph.
GroupingState merge_matched(GroupingState gs, std::span<const PairKey> matched);

// Up to top_m unmerged label pairs ranked by C[i][j] + C[j][i] (ties by pair
// key); pairs with zero symmetric mass are skipped.
std::vector<CandidatePair> refinement_candidates(const TemplateScoreTable& confusion, const GroupingState& gs,
                                                 std::size_t top_m);

DatasetManifest with_groups(const DatasetManifest& m, const GroupingState& gs);

std::vector<CandidatePair> load_pairs(const std::filesystem::path& path);
Record pair_record(const CandidatePair& p);

}  // namespace signmix
