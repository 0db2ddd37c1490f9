#include <benchmark/benchmark.h>

#include "mfq/dde.hpp"
#include "mfq/hopf.hpp"
#include "mfq/stability.hpp"
#include "mfq/stochastic.hpp"

using namespace mfq;

namespace {

ModelParams fig1(double delta) {
  ModelParams p;
  p.n = 2;
  p.lambda = 10;
  p.mu = 1;
  p.beta = 2;
  p.c = 10;
  p.delta = delta;
  return p;
}

const ChoiceFunction kLogistic = ChoiceFunction::logistic(1.0, 1.0);

void BM_Integrate(benchmark::State& state) {
  const double delta = static_cast<double>(state.range(0)) / 10.0;
  IntegratorConfig cfg;
  cfg.horizon = 60;
  const auto history = HistorySpec::constant({4.99, 5.01});
  for (auto _ : state) benchmark::DoNotOptimize(integrate(fig1(delta), kLogistic, history, cfg));
}
BENCHMARK(BM_Integrate)->Arg(6)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SimulatePath(benchmark::State& state) {
  SimConfig cfg;
  cfg.eta = static_cast<int>(state.range(0));
  cfg.horizon = 5;
  cfg.history = HistorySpec::constant({4.99, 5.01});
  std::size_t events = 0;
  for (auto _ : state) {
    const auto path = simulate_path(fig1(0.6), kLogistic, cfg);
    events += path.events.size();
    ++cfg.seed;
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulatePath)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ClassifyDelay(benchmark::State& state) {
  const ModelParams m = fig1(0.0);
  const double pert = default_perturbation(m, kLogistic);
  for (auto _ : state) benchmark::DoNotOptimize(classify_delay(m, kLogistic, 0.9, pert));
}
BENCHMARK(BM_ClassifyDelay)->Unit(benchmark::kMillisecond);

void BM_ClosedForm(benchmark::State& state) {
  const ModelParams m = fig1(0.0);
  for (auto _ : state) benchmark::DoNotOptimize(critical_delay(m, kLogistic));
}
BENCHMARK(BM_ClosedForm);

}  // namespace

BENCHMARK_MAIN();
