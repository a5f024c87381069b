#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace ked::parallel {

enum class Execution { serial, parallel };

// Reductions are split into fixed-size chunks whose partial results are
// combined in chunk order. The grouping of additions therefore does not
// depend on the thread count, and serial and parallel runs agree bit for bit.
inline constexpr std::size_t kChunkSize = 2048;

int max_threads();

template <class T, class F>
T chunked_reduce(std::size_t n, const T& zero, F&& f, Execution exec = Execution::parallel) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<T> partial(chunks, zero);
  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kChunkSize;
    const std::size_t end = (begin + kChunkSize < n) ? begin + kChunkSize : n;
    T acc = zero;
    for (std::size_t i = begin; i < end; ++i) acc += f(i);
    partial[c] = acc;
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) run_chunk(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  }
  T total = zero;
  for (const T& p : partial) total += p;
  return total;
}

template <class F>
double chunked_sum(std::size_t n, F&& f, Execution exec = Execution::parallel) {
  return chunked_reduce<double>(n, 0.0, std::forward<F>(f), exec);
}

template <class F>
void for_each_index(std::size_t n, F&& f, Execution exec = Execution::parallel) {
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) f(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

// Sum and sum of squares, for Monte Carlo standard errors.
struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  Moments& operator+=(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    return *this;
  }
  Moments& operator+=(double v) {
    sum += v;
    sum_sq += v * v;
    return *this;
  }
};

}  // namespace ked::parallel
