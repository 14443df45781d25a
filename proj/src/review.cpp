#include "signmix/review.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>

namespace signmix {

const char* to_string(TaskStatus s) { return s == TaskStatus::open ? "open" : "closed"; }

const char* to_string(ReviewError::Code c) {
  switch (c) {
    case ReviewError::Code::unknown_expert:
      return "unknown_expert";
    case ReviewError::Code::unknown_pair:
      return "unknown_pair";
    case ReviewError::Code::closed_task:
      return "closed_task";
    case ReviewError::Code::conflicting_vote:
      return "conflicting_vote";
    case ReviewError::Code::bad_request:
      return "bad_request";
  }
  return "bad_request";
}

ReviewService::ReviewService(std::vector<std::string> experts, std::vector<CandidatePair> pairs,
                             std::map<std::string, std::string> media, ReviewConfig cfg)
    : experts_(experts.begin(), experts.end()), cfg_(std::move(cfg)) {
  if (cfg_.quorum == 0) throw std::invalid_argument("quorum must be positive");
  if (!cfg_.clock) {
    cfg_.clock = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  auto uri = [&](const std::string& label) {
    auto it = media.find(label);
    return it != media.end() ? it->second : "template://" + label;
  };
  for (const auto& p : pairs) {
    auto [it, inserted] = tasks_.try_emplace(p.key);
    if (inserted) {
      it->second.task = {p, uri(p.key.a), uri(p.key.b), 0, TaskStatus::open};
    } else if (p.rank < it->second.task.pair.rank) {
      it->second.task.pair = p;
    }
  }
  for (const auto& [key, st] : tasks_) order_.push_back(key);
  std::stable_sort(order_.begin(), order_.end(), [&](const PairKey& x, const PairKey& y) {
    return tasks_.at(x).task.pair.rank < tasks_.at(y).task.pair.rank;
  });

  if (!cfg_.votes_log.empty()) {
    for (const auto& v : load_votes(cfg_.votes_log)) apply(v, false);
  }
}

void ReviewService::check_expert(const std::string& expert) const {
  if (!experts_.count(expert)) throw ReviewError(ReviewError::Code::unknown_expert, "unknown expert '" + expert + "'");
}

std::optional<ReviewTask> ReviewService::next_task(const std::string& expert) const {
  std::shared_lock lock(mu_);
  check_expert(expert);
  for (const auto& key : order_) {
    const auto& st = tasks_.at(key);
    if (st.task.status == TaskStatus::open && !st.verdicts.count(expert)) return st.task;
  }
  return std::nullopt;
}

VoteAck ReviewService::apply(const VoteRecord& v, bool persist) {
  check_expert(v.expert);
  auto it = tasks_.find(v.pair);
  if (it == tasks_.end()) {
    throw ReviewError(ReviewError::Code::unknown_pair, "no task for pair (" + v.pair.a + ", " + v.pair.b + ")");
  }
  auto& st = it->second;
  if (auto prior = st.verdicts.find(v.expert); prior != st.verdicts.end()) {
    if (prior->second != v.verdict) {
      throw ReviewError(ReviewError::Code::conflicting_vote, "expert '" + v.expert + "' already voted differently");
    }
    return {VoteStatus::duplicate, st.task.votes_recorded, st.task.status};
  }
  if (st.task.status == TaskStatus::closed) {
    throw ReviewError(ReviewError::Code::closed_task, "task (" + v.pair.a + ", " + v.pair.b + ") is closed");
  }
  if (persist && !cfg_.votes_log.empty()) append_record_durable(cfg_.votes_log, vote_record(v));
  st.verdicts.emplace(v.expert, v.verdict);
  st.task.votes_recorded += 1;
  if (st.task.votes_recorded >= cfg_.quorum) st.task.status = TaskStatus::closed;
  votes_.push_back(v);
  return {VoteStatus::recorded, st.task.votes_recorded, st.task.status};
}

VoteAck ReviewService::submit_vote(const std::string& expert, const PairKey& pair, bool verdict) {
  std::unique_lock lock(mu_);
  VoteRecord v{pair, expert, verdict, cfg_.clock()};
  return apply(v, true);
}

ReviewProgress ReviewService::progress() const {
  std::shared_lock lock(mu_);
  ReviewProgress p;
  p.tasks = tasks_.size();
  for (const auto& [key, st] : tasks_) {
    (st.task.status == TaskStatus::open ? p.open : p.closed) += 1;
  }
  p.votes = votes_.size();
  p.experts = experts_.size();
  return p;
}

std::vector<VoteRecord> ReviewService::votes() const {
  std::shared_lock lock(mu_);
  return votes_;
}

std::vector<ReviewTask> ReviewService::tasks() const {
  std::shared_lock lock(mu_);
  std::vector<ReviewTask> out;
  for (const auto& key : order_) out.push_back(tasks_.at(key).task);
  return out;
}

std::vector<std::string> load_experts(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& [line, rec] : read_records(path)) {
    try {
      if (rec.kind() != "expert") throw std::invalid_argument("expected 'expert' record");
      rec.expect_fields({"id"});
      out.push_back(rec.get("id"));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

std::map<std::string, std::string> load_media(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& [line, rec] : read_records(path)) {
    try {
      if (rec.kind() != "media") throw std::invalid_argument("expected 'media' record");
      rec.expect_fields({"label", "uri"});
      out[rec.get("label")] = rec.get("uri");
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

Record task_record(const ReviewTask& t) {
  return Record("task")
      .add("a", t.pair.key.a)
      .add("b", t.pair.key.b)
      .add("rank", t.pair.rank)
      .add("source", to_string(t.pair.source))
      .add("media_a", t.media_a)
      .add("media_b", t.media_b)
      .add("votes_recorded", t.votes_recorded)
      .add("status", to_string(t.status));
}

Record progress_record(const ReviewProgress& p) {
  return Record("progress")
      .add("tasks", p.tasks)
      .add("open", p.open)
      .add("closed", p.closed)
      .add("votes", p.votes)
      .add("experts", p.experts);
}

Record ack_record(const VoteAck& a) {
  return Record("ack")
      .add("status", a.status == VoteStatus::recorded ? "recorded" : "duplicate")
      .add("votes_recorded", a.votes_recorded)
      .add("task", to_string(a.task_status));
}

}  // namespace signmix
