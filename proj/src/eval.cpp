#include "signmix/eval.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace signmix {

std::string PredictionSet::predicted_label(std::size_t row) const {
  auto p = rows.at(row).predicted;
  return p == kNoLabel ? std::string() : predicted_space.label(p);
}

bool PredictionSet::correct(std::size_t row) const {
  auto p = rows.at(row).predicted;
  return p != kNoLabel && predicted_space.label(p) == truth_label(row);
}

void PredictionSet::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : rows) {
    if (!seen.insert(r.sample_id).second) throw std::invalid_argument("duplicate sample id '" + r.sample_id + "'");
    if (r.predicted != kNoLabel && r.predicted >= predicted_space.size()) {
      throw std::invalid_argument("predicted class out of range for '" + r.sample_id + "'");
    }
    if (r.truth >= truth_space.size()) throw std::invalid_argument("true class out of range for '" + r.sample_id + "'");
  }
}

PredictionSet make_predictions(const std::vector<SampleRecord>& samples, const std::vector<std::size_t>& predicted,
                               const std::vector<std::size_t>& truth, const LabelSpace& space) {
  if (samples.size() != predicted.size() || samples.size() != truth.size()) {
    throw std::invalid_argument("prediction inputs differ in length");
  }
  PredictionSet p;
  p.predicted_space = space;
  p.truth_space = space;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    p.rows.push_back({samples[i].sample_id, predicted[i], truth[i], samples[i].language});
  }
  p.validate();
  return p;
}

double top1_accuracy(const PredictionSet& p) {
  if (p.rows.empty()) throw std::invalid_argument("empty prediction set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.rows.size(); ++i) hit += p.correct(i);
  return static_cast<double>(hit) / static_cast<double>(p.rows.size());
}

Breakdown grouped_accuracy_breakdown(const PredictionSet& p, const DatasetManifest& m) {
  if (!m.has_grouping()) throw std::invalid_argument("manifest has no grouping");
  if (p.rows.empty()) throw std::invalid_argument("empty prediction set");
  std::unordered_map<std::string, const GroupLabel*> group_of;
  for (const auto& g : m.groups) {
    for (const auto& member : g.members) group_of[member] = &g;
  }
  auto lookup = [&](const std::string& label) -> const GroupLabel* {
    auto it = group_of.find(label);
    if (it != group_of.end()) return it->second;
    for (const auto& g : m.groups) {
      if (g.id == label) return &g;  // already a group label
    }
    throw std::invalid_argument("label '" + label + "' is not in the grouping");
  };

  Breakdown b;
  Stratum non, vs;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto* truth = lookup(p.truth_label(i));
    bool hit = false;
    if (p.rows[i].predicted != kNoLabel) hit = lookup(p.predicted_label(i)) == truth;
    auto& s = truth->members.size() >= 2 ? vs : non;
    s.total += 1;
    s.correct += hit;
    b.whole.total += 1;
    b.whole.correct += hit;
  }
  if (non.total) b.non_vssign = non;
  if (vs.total) b.vssign = vs;
  return b;
}

LabelMap build_label_map(const PredictionSet& p) {
  if (p.rows.empty()) throw std::invalid_argument("empty prediction set");
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    if (p.rows[i].predicted == kNoLabel) continue;
    counts[p.predicted_label(i)][p.truth_label(i)] += 1;
  }
  LabelMap map;
  for (const auto& [source, targets] : counts) {
    LabelMapEntry e;
    for (const auto& [target, n] : targets) {  // ascending target order
      e.support += n;
      if (n > e.votes) {
        e.votes = n;
        e.target = target;
        e.tie = false;
      } else if (n == e.votes) {
        e.tie = true;
      }
    }
    map.entries.emplace(source, e);
  }
  return map;
}

PredictionSet apply_label_map(const LabelMap& map, const PredictionSet& preds) {
  PredictionSet out;
  out.truth_space = preds.truth_space;
  out.predicted_space = preds.truth_space;
  for (std::size_t i = 0; i < preds.rows.size(); ++i) {
    auto row = preds.rows[i];
    row.predicted = kNoLabel;
    if (preds.rows[i].predicted != kNoLabel) {
      auto it = map.entries.find(preds.predicted_label(i));
      if (it != map.entries.end() && out.truth_space.contains(it->second.target)) {
        row.predicted = out.truth_space.index(it->second.target);
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

DatasetManifest kshot_truncate(const DatasetManifest& m, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  std::map<std::string, std::vector<std::size_t>> by_gloss;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    if (m.samples[i].subset == Subset::train) by_gloss[m.samples[i].gloss].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<char> keep(m.samples.size(), 1);
  for (auto& [gloss, idx] : by_gloss) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = static_cast<std::size_t>(k); j < idx.size(); ++j) keep[idx[j]] = 0;
  }
  DatasetManifest out = m;
  out.samples.clear();
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    if (keep[i]) out.samples.push_back(m.samples[i]);
  }
  return out;
}

std::vector<Record> prediction_records(const PredictionSet& p) {
  std::vector<Record> out;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    Record r("prediction");
    r.add("sample", p.rows[i].sample_id)
        .add("language", p.rows[i].language.code)
        .add("predicted", p.predicted_label(i))
        .add("truth", p.truth_label(i));
    out.push_back(std::move(r));
  }
  return out;
}

void save_predictions(const PredictionSet& p, const std::filesystem::path& path) {
  write_records(path, prediction_records(p));
}

PredictionSet load_predictions(const std::filesystem::path& path, const LabelSpace* predicted_space,
                               const LabelSpace* truth_space) {
  struct Raw {
    std::string sample, language, predicted, truth;
  };
  std::vector<Raw> raw;
  std::vector<std::string> pred_labels, truth_labels;
  for (const auto& [line, r] : read_records(path)) {
    if (r.kind() != "prediction") throw ParseError(line, "unexpected record '" + r.kind() + "'");
    try {
      r.expect_fields({"sample", "language", "predicted", "truth"});
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
    raw.push_back({r.get("sample"), r.get("language"), r.get("predicted"), r.get("truth")});
    if (!raw.back().predicted.empty()) pred_labels.push_back(raw.back().predicted);
    truth_labels.push_back(raw.back().truth);
  }
  PredictionSet p;
  p.predicted_space = predicted_space ? *predicted_space : LabelSpace(pred_labels);
  p.truth_space = truth_space ? *truth_space : LabelSpace(truth_labels);
  for (const auto& r : raw) {
    PredictionRow row;
    row.sample_id = r.sample;
    row.language = LanguageTag{r.language};
    row.predicted = r.predicted.empty() ? kNoLabel : p.predicted_space.index(r.predicted);
    row.truth = p.truth_space.index(r.truth);
    p.rows.push_back(std::move(row));
  }
  p.validate();
  return p;
}

std::vector<Record> label_map_records(const LabelMap& map) {
  std::vector<Record> out;
  for (const auto& [source, e] : map.entries) {
    Record r("map");
    r.add("source", source).add("target", e.target).add("votes", e.votes).add("support", e.support).add("tie", e.tie);
    out.push_back(std::move(r));
  }
  return out;
}

void save_label_map(const LabelMap& map, const std::filesystem::path& path) {
  write_records(path, label_map_records(map));
}

LabelMap load_label_map(const std::filesystem::path& path) {
  LabelMap map;
  for (const auto& [line, r] : read_records(path)) {
    if (r.kind() != "map") throw ParseError(line, "unexpected record '" + r.kind() + "'");
    LabelMapEntry e;
    e.target = r.get("target");
    e.votes = static_cast<std::size_t>(r.get_int("votes"));
    e.support = static_cast<std::size_t>(r.get_int("support"));
    e.tie = r.get_bool("tie");
    if (!map.entries.emplace(r.get("source"), e).second) throw ParseError(line, "duplicate source label");
  }
  return map;
}

Record breakdown_record(const Breakdown& b) {
  Record r("breakdown");
  r.add("whole", b.whole.accuracy()).add("whole_n", b.whole.total);
  if (b.non_vssign) {
    r.add("non_vssign", b.non_vssign->accuracy()).add("non_vssign_n", b.non_vssign->total);
  } else {
    r.add("non_vssign", "n/a").add("non_vssign_n", std::size_t{0});
  }
  if (b.vssign) {
    r.add("vssign", b.vssign->accuracy()).add("vssign_n", b.vssign->total);
  } else {
    r.add("vssign", "n/a").add("vssign_n", std::size_t{0});
  }
  return r;
}

}  // namespace signmix
