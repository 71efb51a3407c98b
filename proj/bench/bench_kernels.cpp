// Serial reference kernel vs the OpenMP kernel on one grid point per problem.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "oag/harness.hpp"

namespace {

using namespace oag;

const Experiment& experiment(Problem problem) {
  static const auto matching =
      build_experiment(Problem::kMatching, "random_perfect", {{"n", "200"}}, "", {});
  static const auto caching =
      build_experiment(Problem::kCaching, "cyclic", {{"k", "10"}, {"rounds", "50"}}, "", {});
  static const auto mts =
      build_experiment(Problem::kMts, "random", {{"n", "8"}, {"m", "200"}}, "", {});
  switch (problem) {
    case Problem::kMatching: return *matching;
    case Problem::kCaching: return *caching;
    case Problem::kMts: break;
  }
  return *mts;
}

void serial(benchmark::State& state, Problem problem) {
  const Experiment& e = experiment(problem);
  const OagConfig config = OagConfig::from_decimal(0.5, 0.5);
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_point_serial(e, config, 0, trials, 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void parallel(benchmark::State& state, Problem problem) {
  const Experiment& e = experiment(problem);
  const OagConfig config = OagConfig::from_decimal(0.5, 0.5);
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_point_parallel(e, config, 0, trials, 1, omp_get_max_threads()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

BENCHMARK_CAPTURE(serial, matching, Problem::kMatching)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(parallel, matching, Problem::kMatching)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(serial, caching, Problem::kCaching)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(parallel, caching, Problem::kCaching)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(serial, mts, Problem::kMts)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(parallel, mts, Problem::kMts)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
