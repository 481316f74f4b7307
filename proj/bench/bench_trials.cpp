#include <benchmark/benchmark.h>

#include "sysid/lti_sim.hpp"
#include "sysid/ols.hpp"
#include "sysid/parallel.hpp"

namespace {

using namespace sysid;

// One rate-sweep cell: simulate and estimate a stable 3x3 system.
double trial_error(const SystemSpec& spec, int horizon, std::size_t i) {
  const Trajectory traj = simulate(spec, NoiseModel::gaussian(), horizon, 1000 + i);
  return *ols_estimate(traj, spec.a).error_opnorm;
}

SystemSpec stable_system() { return SystemSpec::from_matrix(random_matrix_with_radius(3, 0.9, 7)); }

void BM_TrialsSerial(benchmark::State& state) {
  const SystemSpec spec = stable_system();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto errs = parallel::map_trials_serial<double>(n, [&](std::size_t i) { return trial_error(spec, 1000, i); });
    benchmark::DoNotOptimize(errs);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrialsParallel(benchmark::State& state) {
  const SystemSpec spec = stable_system();
  const auto n = static_cast<std::size_t>(state.range(0));
  parallel::set_thread_count(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto errs = parallel::map_trials<double>(n, [&](std::size_t i) { return trial_error(spec, 1000, i); });
    benchmark::DoNotOptimize(errs);
  }
  parallel::set_thread_count(0);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_TrialsSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Args({64, 1})->Args({64, 2})->Args({64, 4})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
