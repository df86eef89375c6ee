#include <benchmark/benchmark.h>

#include "crtnd/estimators.hpp"
#include "crtnd/inference.hpp"
#include "crtnd/simulation.hpp"

using namespace crtnd;

namespace {

ClusterData replicate_data(int clusters) {
  auto s = default_parallel_scenario();
  s.baseline_y.resize(static_cast<std::size_t>(clusters));
  s.baseline_z.resize(static_cast<std::size_t>(clusters));
  s.covariate.resize(static_cast<std::size_t>(clusters));
  s.treated = clusters / 2;
  s.ascertainment.fixed = std::vector<double>(static_cast<std::size_t>(clusters), 1.0);
  return simulate_parallel(s, study_ascertainment(s), 0).data;
}

void exact_test(benchmark::State& state, bool fast_path) {
  const auto data = replicate_data(static_cast<int>(state.range(0)));
  auto mode = PermutationMode::exact();
  mode.allow_fast_path = fast_path;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        permutation_test(data, NullSpec::relative_risk(1.0), Statistic::difference_in_means, mode).p_two_sided);
  }
}

void BM_ExactMeetInTheMiddle(benchmark::State& state) { exact_test(state, true); }
void BM_ExactEnumeration(benchmark::State& state) { exact_test(state, false); }

void BM_MonteCarlo(benchmark::State& state) {
  const auto data = replicate_data(24);
  const auto mode = PermutationMode::monte_carlo(static_cast<std::uint64_t>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        permutation_test(data, NullSpec::relative_risk(1.0), Statistic::difference_in_means, mode).p_two_sided);
  }
}

void BM_TpfSolve(benchmark::State& state) {
  double t = -0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tpf_solve(t, 2.5));
    t = t < 0.3 ? t + 1e-6 : -0.3;
  }
}

}  // namespace

BENCHMARK(BM_ExactMeetInTheMiddle)->Arg(12)->Arg(16)->Arg(20)->Arg(24)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ExactEnumeration)->Arg(12)->Arg(16)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MonteCarlo)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TpfSolve);
