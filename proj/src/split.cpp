#include "signmix/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace signmix {

RatioMatrix build_ratio_matrix(const DatasetManifest& m) {
  RatioMatrix r;
  for (const auto& g : m.glosses) r.glosses.push_back(g.id);
  for (const auto& s : m.signers) r.signers.push_back(s.id);
  std::sort(r.glosses.begin(), r.glosses.end());
  std::sort(r.signers.begin(), r.signers.end());

  std::unordered_map<std::string, std::size_t> gi, si;
  for (std::size_t i = 0; i < r.glosses.size(); ++i) gi.emplace(r.glosses[i], i);
  for (std::size_t i = 0; i < r.signers.size(); ++i) si.emplace(r.signers[i], i);

  const auto G = r.glosses.size();
  const auto S = r.signers.size();
  r.pair_counts.assign(G * S, 0);
  r.gloss_totals.assign(G, 0);
  for (const auto& s : m.samples) {
    auto g = gi.at(s.gloss);
    r.pair_counts[g * S + si.at(s.signer.id)] += 1;
    r.gloss_totals[g] += 1;
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (r.gloss_totals[g] == 0) throw std::invalid_argument("gloss '" + r.glosses[g] + "' has no samples");
  }
  r.by_signer.assign(G * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t g = 0; g < G; ++g) {
      r.by_signer[s * G + g] =
          static_cast<double>(r.pair_counts[g * S + s]) / static_cast<double>(r.gloss_totals[g]);
    }
  }
  return r;
}

std::size_t test_signer_count(double p, std::size_t signer_count) {
  return static_cast<std::size_t>(std::floor(p * static_cast<double>(signer_count) + 0.5));
}

namespace {

struct Worst {
  double dev = 0.0;
  std::size_t gloss = 0;
};

Worst worst_of(std::span<const double> d, double p) {
  Worst w{-1.0, 0};
  double exact = 0.0;
  for (std::size_t g = 0; g < d.size(); ++g) {
    double dev = std::abs(d[g] - p);
    exact = std::max(exact, dev);
    if (dev > w.dev + kSplitTolerance) w = {dev, g};
  }
  w.dev = exact;
  return w;
}

void fill_deviations(const RatioMatrix& r, std::span<const std::size_t> test, std::vector<double>& d) {
  d.assign(r.gloss_count(), 0.0);
  for (auto s : test) {
    auto col = r.signer_column(s);
    for (std::size_t g = 0; g < d.size(); ++g) d[g] += col[g];
  }
}

// max_g |D_g - R_{g,out} + R_{g,in} - p|, abandoning once it reaches `bound`.
double swapped_worst(std::span<const double> d, std::span<const double> out_col, std::span<const double> in_col,
                     double p, double bound) {
  double worst = 0.0;
  for (std::size_t g = 0; g < d.size(); ++g) {
    double dev = std::abs(d[g] - out_col[g] + in_col[g] - p);
    if (dev > worst) {
      worst = dev;
      if (worst >= bound) return worst;
    }
  }
  return worst;
}

}  // namespace

SplitState evaluate_split(const RatioMatrix& r, std::span<const std::size_t> test_signers, double p) {
  SplitState st;
  st.p = p;
  st.test_signers.assign(test_signers.begin(), test_signers.end());
  std::sort(st.test_signers.begin(), st.test_signers.end());
  fill_deviations(r, st.test_signers, st.deviations);
  auto w = worst_of(st.deviations, p);
  st.worst_dev = w.dev;
  st.worst_gloss = w.gloss;
  return st;
}

std::vector<std::size_t> random_test_set(std::size_t signer_count, std::size_t test_count, std::uint64_t seed,
                                         std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(signer_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(test_count);
  std::sort(order.begin(), order.end());
  return order;
}

SplitRun run_local_search(const RatioMatrix& r, std::vector<std::size_t> initial_test, const SplitConfig& cfg,
                          std::size_t restart) {
  const auto S = r.signer_count();
  const double p = cfg.p;
  const std::size_t max_rounds = cfg.max_rounds ? cfg.max_rounds : 10 * S;

  SplitRun run;
  run.restart = restart;
  run.state = evaluate_split(r, initial_test, p);
  run.trajectory.push_back(run.state.worst_dev);

  std::vector<char> in_test(S, 0);
  for (auto s : run.state.test_signers) in_test[s] = 1;

  std::vector<std::size_t> candidates;
  std::vector<std::size_t> outside;
  while (run.rounds < max_rounds) {
    auto& st = run.state;
    const auto gw = st.worst_gloss;
    const double d_wst = st.worst_dev;

    // Test signers ordered by their share of the worst gloss: largest first
    // when the test side holds too much of it, smallest first otherwise.
    // Stable sort over sorted indices breaks ties by signer id.
    candidates = st.test_signers;
    const bool too_much = st.deviations[gw] > p;
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      return too_much ? r.ratio(gw, a) > r.ratio(gw, b) : r.ratio(gw, a) < r.ratio(gw, b);
    });
    outside.clear();
    for (std::size_t s = 0; s < S; ++s) {
      if (!in_test[s]) outside.push_back(s);
    }

    bool found = false;
    std::size_t best_out = 0, best_in = 0;
    double best_dev = d_wst - kSplitTolerance;
    for (auto s_out : candidates) {
      auto out_col = r.signer_column(s_out);
      for (auto s_in : outside) {
        double cand = swapped_worst(st.deviations, out_col, r.signer_column(s_in), p, best_dev);
        if (cand < best_dev) {
          found = true;
          best_out = s_out;
          best_in = s_in;
          best_dev = cand;
          if (cfg.rule == SwapRule::first_improvement) break;
        }
      }
      if (found && cfg.rule == SwapRule::first_improvement) break;
    }
    ++run.rounds;
    if (!found) {
      run.converged = true;
      break;
    }
    in_test[best_out] = 0;
    in_test[best_in] = 1;
    std::vector<std::size_t> next;
    for (std::size_t s = 0; s < S; ++s) {
      if (in_test[s]) next.push_back(s);
    }
    st = evaluate_split(r, next, p);
    run.trajectory.push_back(st.worst_dev);
  }
  return run;
}

namespace {

void check_config(const RatioMatrix& r, const SplitConfig& cfg) {
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) throw std::invalid_argument("split ratio p must lie in (0, 1)");
  const auto S = r.signer_count();
  if (S < 2) throw std::invalid_argument("split needs at least two signers");
  const auto n = test_signer_count(cfg.p, S);
  if (n < 1) throw std::invalid_argument("round(p * |S|) is 0: no test signers");
  if (n >= S) throw std::invalid_argument("round(p * |S|) covers every signer: no train signers");
}

}  // namespace

std::vector<SplitRun> run_restarts_serial(const RatioMatrix& r, const SplitConfig& cfg) {
  check_config(r, cfg);
  const auto n = test_signer_count(cfg.p, r.signer_count());
  std::vector<SplitRun> runs(cfg.restarts + 1);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    runs[i] = run_local_search(r, random_test_set(r.signer_count(), n, cfg.seed, i), cfg, i);
  }
  return runs;
}

std::vector<SplitRun> run_restarts_parallel(const RatioMatrix& r, const SplitConfig& cfg) {
  check_config(r, cfg);
  const auto n = test_signer_count(cfg.p, r.signer_count());
  const auto count = static_cast<std::int64_t>(cfg.restarts + 1);
  std::vector<SplitRun> runs(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    auto idx = static_cast<std::size_t>(i);
    runs[idx] = run_local_search(r, random_test_set(r.signer_count(), n, cfg.seed, idx), cfg, idx);
  }
  return runs;
}

const SplitRun& select_best(const std::vector<SplitRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("no split runs");
  const SplitRun* best = &runs.front();
  for (const auto& run : runs) {
    if (run.state.worst_dev < best->state.worst_dev ||
        (run.state.worst_dev == best->state.worst_dev && run.restart < best->restart)) {
      best = &run;
    }
  }
  return *best;
}

DatasetManifest assign_subsets(const DatasetManifest& m, std::span<const std::string> test_signer_ids) {
  std::unordered_set<std::string> test(test_signer_ids.begin(), test_signer_ids.end());
  DatasetManifest out = m;
  for (auto& s : out.samples) s.subset = test.count(s.signer.id) ? Subset::test : Subset::train;
  return out;
}

SplitResult optimize_split(const DatasetManifest& m, const SplitConfig& cfg) {
  auto r = build_ratio_matrix(m);
  SplitResult result;
  result.runs = cfg.parallel ? run_restarts_parallel(r, cfg) : run_restarts_serial(r, cfg);
  result.best = select_best(result.runs);
  for (auto s : result.best.state.test_signers) result.test_signer_ids.push_back(r.signers[s]);
  result.manifest = assign_subsets(m, result.test_signer_ids);
  return result;
}

SplitReport verify_split(const DatasetManifest& m, double p, double threshold) {
  SplitReport rep;
  rep.p = p;
  rep.threshold = threshold;
  std::unordered_map<std::string, Subset> signer_side;
  for (const auto& s : m.samples) {
    if (s.subset == Subset::unassigned) {
      throw std::invalid_argument("sample '" + s.sample_id + "' is unassigned");
    }
    auto [it, inserted] = signer_side.emplace(s.signer.id, s.subset);
    if (!inserted && it->second != s.subset) {
      throw IntegrityError("signer '" + s.signer.id + "' has samples in both train and test");
    }
  }
  auto r = build_ratio_matrix(m);
  std::vector<std::size_t> test;
  for (std::size_t s = 0; s < r.signer_count(); ++s) {
    auto it = signer_side.find(r.signers[s]);
    if (it != signer_side.end() && it->second == Subset::test) test.push_back(s);
  }
  auto st = evaluate_split(r, test, p);

  rep.signers = r.signer_count();
  rep.test_signers = test.size();
  rep.signer_test_fraction = rep.signers ? static_cast<double>(rep.test_signers) / rep.signers : 0.0;
  rep.samples = m.samples.size();
  for (const auto& s : m.samples) rep.test_samples += s.subset == Subset::test;
  rep.sample_test_fraction = rep.samples ? static_cast<double>(rep.test_samples) / rep.samples : 0.0;
  rep.worst_dev = st.worst_dev;
  rep.worst_gloss = r.gloss_count() ? r.glosses[st.worst_gloss] : std::string{};
  rep.histogram.assign(20, 0);
  for (std::size_t g = 0; g < r.gloss_count(); ++g) {
    auto bin = static_cast<std::size_t>(std::floor(st.deviations[g] / 0.05 + 1e-9));
    rep.histogram[std::min<std::size_t>(bin, 19)] += 1;
    double dev = std::abs(st.deviations[g] - p);
    if (dev > threshold) rep.exceeding.emplace_back(r.glosses[g], dev);
  }
  return rep;
}

std::vector<Record> report_records(const SplitReport& rep) {
  std::vector<Record> out;
  out.push_back(Record("split_report")
                    .add("p", rep.p)
                    .add("signers", rep.signers)
                    .add("test_signers", rep.test_signers)
                    .add("signer_test_fraction", rep.signer_test_fraction)
                    .add("samples", rep.samples)
                    .add("test_samples", rep.test_samples)
                    .add("sample_test_fraction", rep.sample_test_fraction)
                    .add("worst_dev", rep.worst_dev)
                    .add("worst_gloss", rep.worst_gloss)
                    .add("threshold", rep.threshold)
                    .add("exceeding", rep.exceeding.size()));
  for (std::size_t b = 0; b < rep.histogram.size(); ++b) {
    out.push_back(Record("ratio_bin")
                      .add("lo", static_cast<double>(b) / 20.0)
                      .add("hi", static_cast<double>(b + 1) / 20.0)
                      .add("glosses", rep.histogram[b]));
  }
  for (const auto& [gloss, dev] : rep.exceeding) {
    out.push_back(Record("exceeding").add("gloss", gloss).add("deviation", dev));
  }
  return out;
}

}  // namespace signmix
