#include <benchmark/benchmark.h>

#include "phnmf/eval.hpp"
#include "phnmf/hierarchy.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/model_select.hpp"
#include "phnmf/nmf.hpp"
#include "phnmf/synthgen.hpp"

using namespace phnmf;

namespace {

const SyntheticDataset& dataset() {
  static const SyntheticDataset d = generate(SyntheticSpec::continuous(1));
  return d;
}

void BM_Nmf(benchmark::State& state) {
  const Matrix& x = dataset().X;
  NmfConfig c;
  c.rank = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto f = nmf(x, c);
    benchmark::DoNotOptimize(f.W.values().data());
    ++c.seed;
  }
}
BENCHMARK(BM_Nmf)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_FeatureSimilarity(benchmark::State& state) {
  const Matrix& x = dataset().X;
  NmfConfig c;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        feature_similarity(x, static_cast<std::size_t>(state.range(0)), c).score);
  }
}
BENCHMARK(BM_FeatureSimilarity)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PopulationTree(benchmark::State& state) {
  const Matrix& x = dataset().X;
  auto cfg = HnmfConfig::phnmf_defaults();
  cfg.rank = RankPolicy::fixed(2);
  cfg.max_depth = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto t = population_hnmf(x, cfg);
    benchmark::DoNotOptimize(&t);
  }
}
BENCHMARK(BM_PopulationTree)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
  const auto& d = dataset();
  for (auto _ : state) {
    auto p = matmul(d.W_true, d.H_true);
    benchmark::DoNotOptimize(p.values().data());
  }
}
BENCHMARK(BM_Matmul)->Unit(benchmark::kMicrosecond);

void BM_RidgeCv(benchmark::State& state) {
  const auto& d = dataset();
  for (auto _ : state) {
    auto f = ridge_cv(d.W_true, d.y);
    benchmark::DoNotOptimize(f.coefficients.data());
  }
}
BENCHMARK(BM_RidgeCv)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
