#include <benchmark/benchmark.h>

#include <vector>

#include "lagbias/analysis.hpp"
#include "lagbias/bias_model.hpp"
#include "lagbias/diagnostics.hpp"
#include "lagbias/hmc.hpp"
#include "lagbias/ratio_model.hpp"
#include "lagbias/rng.hpp"

namespace {

using namespace lagbias;

const std::string kData = LAGBIAS_DATA_DIR;

struct Inputs {
  std::vector<LaureateRecord> records = load_laureates(kData + "/laureates.csv");
  std::vector<RatioPoint> points = load_ratios(kData + "/ratios.csv");
  CurveSet curves = fit_all(points);
};

const Inputs& inputs() {
  static const Inputs in;
  return in;
}

void BM_LogDensityGradient(benchmark::State& state) {
  const BiasModel model(prepare(inputs().records, inputs().curves, 10));
  std::vector<double> z{-0.5, 0.1, -1.5, -0.8, -0.4}, g(5);
  for (auto _ : state) benchmark::DoNotOptimize(model.log_density_gradient(z, g));
}
BENCHMARK(BM_LogDensityGradient);

void BM_Leapfrog32(benchmark::State& state) {
  const BiasModel model(prepare(inputs().records, inputs().curves, 10));
  const auto target = make_target(model);
  PhasePoint start;
  start.position = {-0.5, 0.1, -1.5, -0.8, -0.4};
  start.momentum = {0.3, -0.2, 0.1, 0.5, -0.4};
  start.gradient.resize(5);
  start.log_density = target.log_density(start.position, start.gradient);
  for (auto _ : state) {
    auto s = start;
    benchmark::DoNotOptimize(leapfrog(target.log_density, s, 0.05, 32));
  }
}
BENCHMARK(BM_Leapfrog32);

void BM_FitLogistic(benchmark::State& state) {
  const auto pts = points_for(inputs().points, RatioGroup::LifeSciences);
  for (auto _ : state) benchmark::DoNotOptimize(fit_logistic(pts));
}
BENCHMARK(BM_FitLogistic);

void BM_Diagnostics(benchmark::State& state) {
  Rng rng(1);
  ChainSet chains(4, std::vector<double>(static_cast<std::size_t>(state.range(0))));
  for (auto& c : chains)
    for (auto& x : c) x = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(split_rhat(chains));
    benchmark::DoNotOptimize(effective_sample_size(chains));
  }
}
BENCHMARK(BM_Diagnostics)->Arg(500)->Arg(2000);

void BM_HeadlineRun(benchmark::State& state) {
  const auto data = prepare(inputs().records, inputs().curves, 10);
  HmcConfig config;
  config.parallel_chains = true;
  for (auto _ : state) benchmark::DoNotOptimize(run_posterior(data, config));
}
BENCHMARK(BM_HeadlineRun)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
