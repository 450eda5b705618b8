#include <benchmark/benchmark.h>

#include "tamed/model.hpp"
#include "tamed/noise.hpp"
#include "tamed/rng.hpp"
#include "tamed/schemes.hpp"

namespace {

using namespace tamed;

void BM_NormalQuantile(benchmark::State& state) {
  UniformStream u(1, 0, Stream::kBrownian);
  for (auto _ : state) benchmark::DoNotOptimize(normal_quantile(u.next()));
}
BENCHMARK(BM_NormalQuantile);

void BM_PhiloxBlock(benchmark::State& state) {
  Philox4x32::Block ctr{0, 0, 0, 0};
  for (auto _ : state) {
    ++ctr[0];
    benchmark::DoNotOptimize(Philox4x32::generate(ctr, {42, 7}));
  }
}
BENCHMARK(BM_PhiloxBlock);

void BM_SampleNoise(benchmark::State& state) {
  const SdeProblem p = builtin_problem("example2-normal-λ5");
  const int level = static_cast<int>(state.range(0));
  NoiseRealization out;
  std::uint64_t path = 0;
  for (auto _ : state) {
    sample_noise_into(p, level, 42, path++, out);
    benchmark::DoNotOptimize(out.brownian_increments.data());
  }
  state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << level));
}
BENCHMARK(BM_SampleNoise)->Arg(10)->Arg(16);

void BM_Coarsen(benchmark::State& state) {
  const SdeProblem p = builtin_problem("example2-normal-λ5");
  const NoiseRealization n = sample_noise(p, 16, 42);
  CoarseView view;
  for (auto _ : state) {
    coarsen_into(n, static_cast<int>(state.range(0)), view);
    benchmark::DoNotOptimize(view.increments.data());
  }
}
BENCHMARK(BM_Coarsen)->Arg(8)->Arg(13);

void BM_Step(benchmark::State& state, const char* problem, SchemeKind kind, std::size_t jumps) {
  const SdeProblem p = builtin_problem(problem);
  Stepper stepper(p, SchemeSpec::make(kind, 10, p.horizon));
  const double dw[] = {0.01};
  const double marks[] = {0.1, -0.05};
  const double offsets[] = {0.004, 0.007};
  const CellNoise cell{1.0 / 1024, dw, std::span(marks, jumps), std::span(offsets, jumps)};
  double x[] = {1.2};
  double out[1];
  for (auto _ : state) {
    stepper.step(x, cell, out);
    benchmark::DoNotOptimize(out[0]);
  }
}
BENCHMARK_CAPTURE(BM_Step, euler, "example1", SchemeKind::TamedEuler, 0);
BENCHMARK_CAPTURE(BM_Step, milstein_continuous, "example1", SchemeKind::TamedMilsteinContinuous, 0);
BENCHMARK_CAPTURE(BM_Step, untamed, "example1", SchemeKind::UntamedMilstein, 0);
BENCHMARK_CAPTURE(BM_Step, jump_1d_quiet, "example2-normal-λ5", SchemeKind::TamedMilsteinJump1D, 0);
BENCHMARK_CAPTURE(BM_Step, jump_1d_two_jumps, "example2-normal-λ5",
                  SchemeKind::TamedMilsteinJump1D, 2);

void BM_CoupledPath(benchmark::State& state) {
  const SdeProblem p = builtin_problem("example1");
  std::vector<Stepper> steppers;
  for (int level = 8; level <= 13; ++level) {
    steppers.emplace_back(p, SchemeSpec::make(SchemeKind::TamedMilsteinContinuous, level, 1.0));
  }
  Stepper reference(p, SchemeSpec::make(SchemeKind::TamedMilsteinContinuous, 16, 1.0));
  NoiseRealization noise;
  CoarseView view;
  std::uint64_t path = 0;
  for (auto _ : state) {
    sample_noise_into(p, 16, 42, path++, noise);
    coarsen_into(noise, 16, view);
    double acc = reference.simulate(view, p.initial_value).terminal_value[0];
    for (std::size_t l = 0; l < steppers.size(); ++l) {
      coarsen_into(noise, 8 + static_cast<int>(l), view);
      acc += steppers[l].simulate(view, p.initial_value).terminal_value[0];
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_CoupledPath)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
