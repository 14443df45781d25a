#pragma once

// Balanced signer-disjoint train/test split.
//
// A fixed number round(p * |S|) of signers is placed in the test set. The
// local search repeatedly finds the gloss whose test-sample ratio D_g deviates
// most from p and swaps one test signer for one train signer, accepting the
// first swap that lowers the worst deviation.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "signmix/manifest.hpp"

namespace signmix {

// Counts are kept exactly; ratios are evaluated in double precision.
struct RatioMatrix {
  std::vector<std::string> glosses;  // sorted ids
  std::vector<std::string> signers;  // sorted ids
  std::vector<std::int64_t> pair_counts;   // [gloss][signer]
  std::vector<std::int64_t> gloss_totals;  // N_g
  std::vector<double> by_signer;           // [signer][gloss] = N_{g,s} / N_g

  std::size_t gloss_count() const noexcept { return glosses.size(); }
  std::size_t signer_count() const noexcept { return signers.size(); }
  std::int64_t count(std::size_t g, std::size_t s) const { return pair_counts[g * signers.size() + s]; }
  double ratio(std::size_t g, std::size_t s) const { return by_signer[s * glosses.size() + g]; }
  std::span<const double> signer_column(std::size_t s) const {
    return {by_signer.data() + s * glosses.size(), glosses.size()};
  }
};

// Throws std::invalid_argument if a gloss has no samples.
RatioMatrix build_ratio_matrix(const DatasetManifest& m);

enum class SwapRule { first_improvement, best_improvement };

struct SplitConfig {
  double p = 0.2;
  std::uint64_t seed = 0;
  std::size_t max_rounds = 0;  // 0: 10 * |S|
  std::size_t restarts = 0;    // extra random initialisations on top of the first
  SwapRule rule = SwapRule::first_improvement;
  bool parallel = true;
};

struct SplitState {
  double p = 0.2;
  std::vector<std::size_t> test_signers;  // sorted signer indices
  std::vector<double> deviations;         // D_g per gloss
  double worst_dev = 0.0;
  std::size_t worst_gloss = 0;
};

struct SplitRun {
  SplitState state;
  std::vector<double> trajectory;  // worst_dev at start and after every accepted swap
  std::size_t rounds = 0;
  bool converged = false;
  std::size_t restart = 0;
};

struct SplitResult {
  SplitRun best;
  std::vector<SplitRun> runs;
  std::vector<std::string> test_signer_ids;
  DatasetManifest manifest;  // subsets assigned
};

inline constexpr double kSplitTolerance = 1e-12;

// round(p * n), halves rounded up.
std::size_t test_signer_count(double p, std::size_t signer_count);

// D_g, worst deviation and worst gloss (ties to the lexicographically first gloss).
SplitState evaluate_split(const RatioMatrix& r, std::span<const std::size_t> test_signers, double p);

std::vector<std::size_t> random_test_set(std::size_t signer_count, std::size_t test_count, std::uint64_t seed,
                                         std::size_t restart);

// One local-search run from the given initial test set.
SplitRun run_local_search(const RatioMatrix& r, std::vector<std::size_t> initial_test, const SplitConfig& cfg,
                          std::size_t restart = 0);

// All 1 + cfg.restarts runs, serially or with OpenMP. Both produce identical runs.
std::vector<SplitRun> run_restarts_serial(const RatioMatrix& r, const SplitConfig& cfg);
std::vector<SplitRun> run_restarts_parallel(const RatioMatrix& r, const SplitConfig& cfg);

// Lowest worst_dev, then lowest restart index.
const SplitRun& select_best(const std::vector<SplitRun>& runs);

// Throws std::invalid_argument for p outside (0,1), fewer than two signers,
// or a test-set size that is 0 or |S|.
SplitResult optimize_split(const DatasetManifest& m, const SplitConfig& cfg);

DatasetManifest assign_subsets(const DatasetManifest& m, std::span<const std::string> test_signer_ids);

struct SplitReport {
  double p = 0.2;
  double threshold = 0.05;
  std::size_t signers = 0;
  std::size_t test_signers = 0;
  double signer_test_fraction = 0.0;
  std::size_t samples = 0;
  std::size_t test_samples = 0;
  double sample_test_fraction = 0.0;
  double worst_dev = 0.0;
  std::string worst_gloss;
  std::vector<std::size_t> histogram;  // D_g counts in 20 bins of width 0.05 over [0, 1]
  std::vector<std::pair<std::string, double>> exceeding;  // glosses with |D_g - p| > threshold
};

// Throws std::invalid_argument if any sample is unassigned and IntegrityError
// if a signer appears in both subsets.
SplitReport verify_split(const DatasetManifest& m, double p, double threshold = 0.05);

std::vector<Record> report_records(const SplitReport& report);

}  // namespace signmix
