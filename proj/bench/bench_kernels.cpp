// Serial reference against the OpenMP path for the three hot kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "signmix/grouping.hpp"
#include "signmix/kernels.hpp"
#include "signmix/split.hpp"

using namespace signmix;

namespace {

Model bench_model(std::size_t languages, std::size_t classes) {
  std::vector<HeadSpec> heads;
  for (std::size_t h = 0; h < languages; ++h) {
    HeadSpec s{{"l" + std::to_string(h)}, {}};
    for (std::size_t c = 0; c < classes; ++c) s.labels.push_back("c" + std::to_string(c));
    heads.push_back(s);
  }
  Model m(std::make_shared<MlpEncoder>(32, 16, 64, 32), heads);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 0.1);
  for (auto& p : m.params()) p = nd(rng);
  return m;
}

MixedBatch bench_batch(std::size_t n, std::size_t languages, std::size_t classes) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 1.0);
  MixedBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(32 * 16);
    for (auto& v : f) v = nd(rng);
    b.items.push_back(make_item("x" + std::to_string(i), {"l" + std::to_string(i % languages)}, std::move(f),
                                i % classes, classes, {0.1, -0.1}));
  }
  return b;
}

void BM_CotrainLoss(benchmark::State& state) {
  auto m = bench_model(3, 20);
  auto b = bench_batch(static_cast<std::size_t>(state.range(1)), 3, 20);
  std::vector<double> grad(m.param_count());
  const auto exec = state.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : state) benchmark::DoNotOptimize(cotrain_loss(m, b, LossOptions{}, grad, exec).total);
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_CotrainLoss)->ArgNames({"parallel", "batch"})->Args({0, 64})->Args({1, 64})->Unit(benchmark::kMillisecond);

DatasetManifest bench_manifest(int signers, int glosses) {
  std::mt19937_64 rng(3);
  DatasetManifest m;
  m.language = {"xx"};
  for (int g = 0; g < glosses; ++g) m.glosses.push_back({"g" + std::to_string(g), m.language});
  for (int s = 0; s < signers; ++s) m.signers.push_back({"s" + std::to_string(s)});
  int serial = 0;
  for (int g = 0; g < glosses; ++g) {
    for (int s = 0; s < signers; ++s) {
      for (unsigned k = 0; k < 1 + rng() % 3; ++k) {
        SampleRecord r;
        r.sample_id = "x" + std::to_string(serial++);
        r.signer = m.signers[static_cast<std::size_t>(s)];
        r.gloss = m.glosses[static_cast<std::size_t>(g)].id;
        r.language = m.language;
        r.video_length = 80;
        r.sign_start = 5;
        r.sign_end = 70;
        m.samples.push_back(r);
      }
    }
  }
  return m;
}

void BM_SplitRestarts(benchmark::State& state) {
  auto r = build_ratio_matrix(bench_manifest(60, 100));
  SplitConfig cfg;
  cfg.restarts = 7;
  for (auto _ : state) {
    auto runs = state.range(0) ? run_restarts_parallel(r, cfg) : run_restarts_serial(r, cfg);
    benchmark::DoNotOptimize(select_best(runs).state.worst_dev);
  }
}
BENCHMARK(BM_SplitRestarts)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CandidatePairs(benchmark::State& state) {
  const std::size_t n = 400;
  TemplateScoreTable t;
  for (std::size_t i = 0; i < n; ++i) t.labels.push_back("g" + std::to_string(i));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  t.scores.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += t.at(i, j) = u(rng);
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) /= sum;
  }
  for (auto _ : state) {
    auto pairs = state.range(0) ? candidate_pairs_from_templates(t) : candidate_pairs_from_templates_serial(t);
    benchmark::DoNotOptimize(pairs.size());
  }
}
BENCHMARK(BM_CandidatePairs)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
