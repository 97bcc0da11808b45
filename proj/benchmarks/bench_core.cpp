#include "tncond/conditioning.hpp"
#include "tncond/mps.hpp"
#include "tncond/network.hpp"

#include <benchmark/benchmark.h>

using namespace tncond;

static void BM_MpsContract(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Mps m = random_mps(n, 16, 2, 1);
  const TensorNetwork tn = m.to_network();
  for (auto _ : state)
    benchmark::DoNotOptimize(contract_network(tn));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MpsContract)->DenseRange(8, 14, 2);

static void BM_BlockNorms(benchmark::State &state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Mps m = random_mps(16, d, 2, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(block_norms(m));
}
BENCHMARK(BM_BlockNorms)->RangeMultiplier(2)->Range(8, 64);

static void BM_SiteEnvironmentNorms(benchmark::State &state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const TensorNetwork tn = random_mps(10, d, 2, 3).to_network();
  for (auto _ : state)
    benchmark::DoNotOptimize(site_environment_norms(tn));
}
BENCHMARK(BM_SiteEnvironmentNorms)->RangeMultiplier(2)->Range(4, 16);

static void BM_Canonicalize(benchmark::State &state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Mps m = random_mps(32, d, 2, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(canonicalize(m, 16));
}
BENCHMARK(BM_Canonicalize)->RangeMultiplier(2)->Range(8, 128);

static void BM_WorstCaseSolve(benchmark::State &state) {
  const TensorNetwork tn = random_mps(6, 4, 2, 5).to_network();
  std::vector<double> radii;
  for (const auto &v : tn.vertices())
    radii.push_back(1e-3 * frobenius_norm(v.tensor));
  for (auto _ : state)
    benchmark::DoNotOptimize(worst_case_solve(tn, radii));
}
BENCHMARK(BM_WorstCaseSolve);

BENCHMARK_MAIN();
