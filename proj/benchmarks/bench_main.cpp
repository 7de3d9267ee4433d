#include <benchmark/benchmark.h>

#include <complex>
#include <memory>

#include "imclab/chaos.hpp"
#include "imclab/estimator.hpp"
#include "imclab/sampler.hpp"

using namespace imclab;

namespace {

struct BenchSetup {
  Grid grid;
  CovarianceKernel kernel = CovarianceKernel::pure_log(2);
  TestFunction tf{2, {0.5, 0.5, 0.0}, 0.15};
  std::unique_ptr<HEstimator> est;
  ChaosSample mu;

  BenchSetup(int n, double eta, EstimatorPath path)
      : grid(build_grid(2, n, 1.0)) {
    EstimatorConfig cfg;
    cfg.beta = 1.0;
    cfg.scales = {eta};
    cfg.weight = WeightMode::ExactC;
    cfg.path = path;
    est = std::make_unique<HEstimator>(grid, nullptr, tf, cfg,
                                       WeightSources{&kernel, nullptr,
                                                     nullptr});
    mu.grid = grid;
    mu.beta = 1.0;
    mu.values.resize(grid.total_points());
    for (std::int64_t i = 0; i < grid.total_points(); ++i) {
      Vec x = grid.point(i);
      mu.values[i] = std::polar(1.0, 3.0 * x[0] + 2.0 * x[1] * x[1]);
    }
  }
};

void BM_HEtaDirect(benchmark::State& state) {
  BenchSetup s(static_cast<int>(state.range(0)), 0.1, EstimatorPath::Direct);
  for (auto _ : state) benchmark::DoNotOptimize(s.est->h_eta(s.mu, 0));
}
BENCHMARK(BM_HEtaDirect)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_HEtaFast(benchmark::State& state) {
  BenchSetup s(static_cast<int>(state.range(0)), 0.1,
               EstimatorPath::FastConvolution);
  for (auto _ : state) benchmark::DoNotOptimize(s.est->h_eta(s.mu, 0));
}
BENCHMARK(BM_HEtaFast)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SpectralSample(benchmark::State& state) {
  Grid grid = build_grid(2, static_cast<int>(state.range(0)), 1.0);
  auto K = CovarianceKernel::gff_square(64);
  GffSampler sampler(grid, K, 64);
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample({1, r++}));
}
BENCHMARK(BM_SpectralSample)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ChaosBuild(benchmark::State& state) {
  Grid grid = build_grid(2, static_cast<int>(state.range(0)), 1.0);
  auto K = CovarianceKernel::gff_square(64);
  GffSampler sampler(grid, K, 64);
  auto field = sampler.sample({1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(build_chaos(field, {1.0}));
}
BENCHMARK(BM_ChaosBuild)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
