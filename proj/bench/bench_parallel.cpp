// Parallel (OpenMP) paths against their serial references.

#include "ccd/plant_family.hpp"
#include "ccd/surrogate.hpp"
#include "ccd/sweep.hpp"

#include <benchmark/benchmark.h>
#include <fmt/format.h>

#include <omp.h>

using namespace ccd;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) ? fmt::format("parallel x{}", omp_get_max_threads()) : "serial");
}

void BM_FamilyBuild(benchmark::State& state) {
  const fowt::Surrogate s;
  const auto cs = lti::linspace(36, 78, 4), cd = lti::linspace(6, 24, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(lpv::build_surrogate_family(s, cs, cd, fowt::default_wind_samples(), mode(state)));
  label(state);
}
BENCHMARK(BM_FamilyBuild)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_HinfSweep(benchmark::State& state) {
  const fowt::Surrogate s;
  const auto a = s.linearize(11.0, fowt::kNominalPlant).model;
  const auto b = s.linearize(12.0, fowt::kNominalPlant).model;
  const auto grid = lti::logspace(-3, 2, 4000);
  for (auto _ : state) benchmark::DoNotOptimize(lti::sigma_max_difference(a, b, grid, mode(state)));
  label(state);
}
BENCHMARK(BM_HinfSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  auto config = design::SweepConfig::load(CCD_CONFIG_DIR "/sweep_smoke.json");
  config.cs_axis = lti::linspace(36, 78, 3);
  config.cd_axis = lti::linspace(6, 24, 3);
  config.case_means = {8, 12, 16};
  const auto family = design::build_family(config);
  design::RunOptions options;
  options.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(design::run_sweep(config, family, options));
  label(state);
}
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
