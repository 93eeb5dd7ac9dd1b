#include <benchmark/benchmark.h>

#include "tsb/models.hpp"
#include "tsb/nulls.hpp"
#include "tsb/statistics.hpp"

namespace {

using namespace tsb;

struct Fixture {
  ModelSpec model;
  DataMatrix x;
  DataMatrix y;

  Fixture(Eigen::Index n, Eigen::Index d)
      : model(build_cg(d, RngStream(7, "bench-model", 0))) {
    RngStream sx(7, "bench-x", 0);
    RngStream sy(7, "bench-y", 0);
    x = sample(model, n, sx);
    y = sample(model, n, sy);
  }
};

void BM_SlicedWasserstein(benchmark::State& state) {
  const Fixture f(state.range(0), 5);
  MetricConfig cfg;
  cfg.slices = 100;
  std::uint64_t i = 0;
  for (auto _ : state) {
    RngStream dirs(7, "bench-dirs", i++);
    benchmark::DoNotOptimize(sliced_wasserstein(f.x, f.y, cfg, dirs));
  }
}
BENCHMARK(BM_SlicedWasserstein)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_MeanKS(benchmark::State& state) {
  const Fixture f(state.range(0), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mean_ks(f.x, f.y));
  }
}
BENCHMARK(BM_MeanKS)->Arg(1000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_SlicedKS(benchmark::State& state) {
  const Fixture f(state.range(0), 5);
  MetricConfig cfg;
  cfg.slices = 100;
  std::uint64_t i = 0;
  for (auto _ : state) {
    RngStream dirs(7, "bench-dirs", i++);
    benchmark::DoNotOptimize(sliced_ks(f.x, f.y, cfg, dirs));
  }
}
BENCHMARK(BM_SlicedKS)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_MmdUnbiased(benchmark::State& state) {
  const Fixture f(state.range(0), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmd_unbiased(f.x, f.y));
  }
}
BENCHMARK(BM_MmdUnbiased)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_FgdInf(benchmark::State& state) {
  const Fixture f(state.range(0), 5);
  MetricConfig cfg;
  std::uint64_t i = 0;
  for (auto _ : state) {
    RngStream draws(7, "bench-draws", i++);
    benchmark::DoNotOptimize(fgd_inf(f.x, f.y, cfg, draws));
  }
}
BENCHMARK(BM_FgdInf)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Llr(benchmark::State& state) {
  const Fixture f(state.range(0), 5);
  const Deformation def = make_deformation(
      DeformKind::Mu, 0.1, model_info_of(f.model), RngStream(7, "bench-def", 0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(llr(f.model, def, f.y));
  }
}
BENCHMARK(BM_Llr)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_NullEstimation(benchmark::State& state) {
  const Fixture f(1, 3);
  MetricConfig cfg;
  cfg.slices = 20;
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_null_generator(
        f.model, MetricKind::SW, cfg, state.range(0), 100,
        RngStream(7, "bench-null", i++)));
  }
}
BENCHMARK(BM_NullEstimation)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
