// Serial reference against the OpenMP path for each parallel kernel.
// Arg 0 selects Exec::serial, 1 Exec::parallel.

#include "densityshape/bootstrap.hpp"
#include "densityshape/density.hpp"
#include "densityshape/limit_lab.hpp"
#include "densityshape/modes.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace densityshape;

namespace {

Exec exec_of(const benchmark::State& state)
{
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

Sample normal_sample(std::size_t n)
{
  StreamRng rng(1, 0);
  std::normal_distribution<double> d;
  std::vector<double> x(n);
  for (auto& v : x)
    v = d(rng);
  return Sample(x);
}

void kde_grid(benchmark::State& state)
{
  const DensityEstimate est(normal_sample(20000), Bandwidth(0.1));
  std::vector<double> xs(4096), out(4096);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = -4.0 + 8.0 * static_cast<double>(i) / 4095.0;
  for (auto _ : state) {
    est.evaluate(xs, out, 0, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void sj_bandwidth(benchmark::State& state)
{
  const Sample s = normal_sample(2000);
  for (auto _ : state)
    benchmark::DoNotOptimize(bandwidth_sj(s, exec_of(state)).h.value());
}

void delta_bootstrap(benchmark::State& state)
{
  const Sample s = normal_sample(500);
  ResamplePlan plan;
  plan.replicates = 64;
  for (auto _ : state)
    benchmark::DoNotOptimize(bootstrap_delta_distribution(s, 2, plan, {}, exec_of(state)).values.size());
}

void mode_bootstrap(benchmark::State& state)
{
  const Sample s = normal_sample(500);
  ModeBootstrapOptions o;
  o.replicates = 64;
  for (auto _ : state)
    benchmark::DoNotOptimize(bootstrap_mode_distribution(s, Bandwidth(0.2), o, exec_of(state)).counts.size());
}

void limit_modes(benchmark::State& state)
{
  LimitConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(limit_mode_distribution(cfg, 32, exec_of(state)).counts.size());
}

void z_limit(benchmark::State& state)
{
  ZLimitConfig cfg;
  cfg.reps = 256;
  for (auto _ : state)
    benchmark::DoNotOptimize(excess_mass_limit_samples(cfg, exec_of(state)).mean);
}

} // namespace

BENCHMARK(kde_grid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(sj_bandwidth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(delta_bootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(mode_bootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(limit_modes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(z_limit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
