#pragma once

#include <functional>
#include <span>
#include <vector>

namespace perihom {

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Euclidean-orthonormal vectors spanning a known null space.
struct Deflation {
  std::vector<std::vector<double>> basis;

  bool empty() const { return basis.empty(); }
  /// v -= sum_k (v, z_k) z_k
  void project(std::span<double> v) const;
  /// Orthonormalizes `vectors` (modified Gram-Schmidt, twice) and keeps the
  /// ones that survive with norm above 1e-10 of their original size.
  static Deflation from_vectors(std::vector<std::vector<double>> vectors);
};

struct CgOptions {
  double rel_tol = 1e-10;
  int max_iterations = 0;  // 0: 10 times the system size
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi)definite map. `x` holds the initial guess on entry. With deflation,
/// the right-hand side, iterates and preconditioned residuals are kept
/// orthogonal to the deflation space. Throws SolverFailure when the relative
/// residual |b - Ax| / |b| does not reach rel_tol within the iteration cap.
CgReport solve_spd(const LinearMap& a, std::span<const double> b, std::span<double> x,
                   const LinearMap& preconditioner = {}, const Deflation* deflation = nullptr,
                   const CgOptions& options = {});

}  // namespace perihom
