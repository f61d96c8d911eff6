#pragma once

#include <complex>
#include <span>
#include <vector>

#include "perihom/assembly.hpp"
#include "perihom/cg.hpp"

namespace perihom {

/// Pseudo-inverse of a translation-invariant stencil on a periodic grid,
/// diagonalized by the FFT. The stencil of node 0 is taken as representative.
/// Modes whose symbol eigenvalue is below 1e-9 of the largest are dropped.
class PeriodicSpectralInverse {
 public:
  explicit PeriodicSpectralInverse(const StencilOperator& op);
  ~PeriodicSpectralInverse();
  PeriodicSpectralInverse(const PeriodicSpectralInverse&) = delete;
  PeriodicSpectralInverse& operator=(const PeriodicSpectralInverse&) = delete;

  void apply(std::span<const double> in, std::span<double> out) const;
  LinearMap as_map() const {
    return [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
  }

 private:
  int n_ = 0;
  std::size_t real_size_ = 0;
  std::size_t spectral_size_ = 0;
  double scale_ = 1.0;
  std::vector<std::complex<double>> inverse_;  // n x n per retained frequency
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

/// Pseudo-inverse of a translation-invariant stencil with natural boundary
/// rows on a rectangle, through DCT-I in every direction. Requires a stencil
/// that is even in each direction with symmetric blocks (see
/// make_uniform_form with drop_cross); throws Error(configuration) otherwise.
class CosineSpectralInverse {
 public:
  explicit CosineSpectralInverse(const StencilOperator& op);
  ~CosineSpectralInverse();
  CosineSpectralInverse(const CosineSpectralInverse&) = delete;
  CosineSpectralInverse& operator=(const CosineSpectralInverse&) = delete;

  void apply(std::span<const double> in, std::span<double> out) const;
  LinearMap as_map() const {
    return [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
  }

 private:
  StructuredGrid grid_;
  int n_ = 0;
  double scale_ = 1.0;
  std::vector<double> inverse_;  // n x n per frequency
  void* plan_ = nullptr;
};

}  // namespace perihom
