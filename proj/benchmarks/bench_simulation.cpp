#include <benchmark/benchmark.h>

#include "crtnd/simulation.hpp"

using namespace crtnd;

namespace {

void BM_SimulateParallelReplicate(benchmark::State& state) {
  const auto s = default_parallel_scenario();
  const auto c = study_ascertainment(s);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_parallel(s, c, i++).degenerate);
}

void BM_EvaluateParallel(benchmark::State& state, std::vector<std::string> estimators) {
  auto s = default_parallel_scenario();
  s.replicates = 100;
  s.estimators = std::move(estimators);
  EvaluateOptions o;
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(s, o).rows.size());
  state.SetItemsProcessed(state.iterations() * 100);
}

void BM_EvaluateSteppedWedge(benchmark::State& state) {
  auto s = default_sw_scenario();
  s.replicates = 20;
  EvaluateOptions o;
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(s, o).rows.size());
  state.SetItemsProcessed(state.iterations() * 20);
}

}  // namespace

BENCHMARK(BM_SimulateParallelReplicate);
BENCHMARK_CAPTURE(BM_EvaluateParallel, log_contrast, std::vector<std::string>{"log_contrast"})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EvaluateParallel, all_estimators, std::vector<std::string>{})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateSteppedWedge)->Unit(benchmark::kMillisecond);
