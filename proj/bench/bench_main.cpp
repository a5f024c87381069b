// Serial reference against the OpenMP kernels. Both paths share the chunked
// reduction order, so only the wall time differs.
#include <benchmark/benchmark.h>

#include "ked/dictionary.hpp"
#include "ked/kernels.hpp"
#include "ked/measures.hpp"
#include "ked/oracle.hpp"
#include "ked/quadrature.hpp"

namespace {

using ked::parallel::Execution;

Execution mode(const benchmark::State& state) { return state.range(1) != 0 ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(1) != 0 ? "openmp" : "serial"); }

void BM_Gram(benchmark::State& state) {
  const auto k = ked::Kernel::matern(2, 0.7);
  const auto m = ked::Measure::gaussian_diag(ked::Vector::Zero(3), ked::Vector::Ones(3));
  const ked::PointSet pts = m->sample(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    ked::Matrix g = state.range(1) != 0 ? ked::gram(*k, pts) : ked::gram_serial(*k, pts);
    benchmark::DoNotOptimize(g.data());
  }
  label(state);
}

void BM_Mmd(benchmark::State& state) {
  const auto k = ked::Kernel::gaussian(ked::Vector::Ones(2));
  const auto m = ked::Measure::gaussian_diag(ked::Vector::Zero(2), ked::Vector::Ones(2));
  const ked::Embedding e = ked::embed(*k, *m);
  const auto n = state.range(0);
  const ked::PointSet pts = m->sample(static_cast<std::size_t>(n), 2);
  const ked::Vector w = ked::Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(ked::mmd2(*k, e, pts, w, mode(state)));
  label(state);
}

void BM_OracleKpp(benchmark::State& state) {
  const auto k = ked::Kernel::matern(1, 0.5);
  const auto m = ked::Measure::uniform_box(ked::Vector::Zero(2), ked::Vector::Ones(2));
  const ked::OracleOptions opts{static_cast<std::size_t>(state.range(0)), 0, mode(state)};
  for (auto _ : state) benchmark::DoNotOptimize(ked::estimate_kpp(*k, *m, opts).value);
  label(state);
}

void BM_MonteCarloKp(benchmark::State& state) {
  const auto k = ked::Kernel::matern(2, 1.0);
  const auto m = ked::Measure::gaussian_diag(ked::Vector::Zero(4), ked::Vector::Ones(4));
  const ked::Vector x = ked::Vector::Constant(4, 0.3);
  const ked::OracleOptions opts{static_cast<std::size_t>(state.range(0)), 7, mode(state)};
  for (auto _ : state) benchmark::DoNotOptimize(ked::estimate_kp(*k, *m, x, opts).value);
  label(state);
}

}  // namespace

BENCHMARK(BM_Gram)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Mmd)->ArgsProduct({{2000, 8000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleKpp)->ArgsProduct({{20, 40}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloKp)->ArgsProduct({{100000, 1000000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
