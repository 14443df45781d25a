#pragma once

// Adjudication queue for candidate VSSign pairs. Every expert sees every pair
// until the pair reaches quorum; votes go to an append-only log that is
// replayed on start-up.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "signmix/grouping.hpp"

namespace signmix {

enum class TaskStatus { open, closed };
const char* to_string(TaskStatus s);

struct ReviewTask {
  CandidatePair pair;
  std::string media_a;
  std::string media_b;
  std::size_t votes_recorded = 0;
  TaskStatus status = TaskStatus::open;
};

enum class VoteStatus { recorded, duplicate };

struct VoteAck {
  VoteStatus status = VoteStatus::recorded;
  std::size_t votes_recorded = 0;
  TaskStatus task_status = TaskStatus::open;
};

struct ReviewProgress {
  std::size_t tasks = 0;
  std::size_t open = 0;
  std::size_t closed = 0;
  std::size_t votes = 0;
  std::size_t experts = 0;
};

class ReviewError : public std::runtime_error {
 public:
  enum class Code { unknown_expert, unknown_pair, closed_task, conflicting_vote, bad_request };
  ReviewError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};
const char* to_string(ReviewError::Code c);

struct ReviewConfig {
  std::size_t quorum = 5;
  std::filesystem::path votes_log;  // empty: in-memory only
  std::function<std::int64_t()> clock;  // defaults to unix seconds
};

class ReviewService {
 public:
  // media maps gloss id -> URI; missing entries fall back to "template://<id>".
  ReviewService(std::vector<std::string> experts, std::vector<CandidatePair> pairs,
                std::map<std::string, std::string> media, ReviewConfig cfg);

  // Open task the expert has not voted on, lowest rank first (ties by pair).
  std::optional<ReviewTask> next_task(const std::string& expert) const;

  // Identical resubmission is acknowledged without a new log entry.
  VoteAck submit_vote(const std::string& expert, const PairKey& pair, bool verdict);

  ReviewProgress progress() const;
  std::vector<VoteRecord> votes() const;
  std::vector<ReviewTask> tasks() const;
  std::size_t quorum() const noexcept { return cfg_.quorum; }

 private:
  struct TaskState {
    ReviewTask task;
    std::map<std::string, bool> verdicts;
  };

  void check_expert(const std::string& expert) const;
  VoteAck apply(const VoteRecord& v, bool persist);

  std::set<std::string> experts_;
  std::map<PairKey, TaskState> tasks_;
  std::vector<PairKey> order_;  // by (rank, pair)
  std::vector<VoteRecord> votes_;
  ReviewConfig cfg_;
  mutable std::shared_mutex mu_;
};

std::vector<std::string> load_experts(const std::filesystem::path& path);
std::map<std::string, std::string> load_media(const std::filesystem::path& path);

Record task_record(const ReviewTask& t);
Record progress_record(const ReviewProgress& p);
Record ack_record(const VoteAck& a);

}  // namespace signmix
