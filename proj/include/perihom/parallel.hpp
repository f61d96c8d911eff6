#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace perihom {

/// Reductions are split into fixed-size chunks and the partial sums added in
/// chunk order, so results do not depend on the thread count.
inline constexpr std::size_t kReductionChunk = 4096;

int max_threads();
/// Caps the OpenMP team size (values < 1 are ignored).
void set_threads(int n);
/// Reads PERIHOM_THREADS and applies it if set.
void apply_thread_env();

template <class Term>
double chunked_sum(std::size_t n, Term&& term) {
  const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t hi = std::min(n, lo + kReductionChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[c] = s;
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

double dot(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);

}  // namespace perihom
