#pragma once

#include <vector>

#include <Eigen/Dense>

namespace perihom {

/// Lattice generated by the columns of `basis`, together with its dual
/// lattice and the two radii used throughout the error estimates.
///
/// The elementary cell is the centered parallelotope
/// { sum_j tau_j a_j : -1/2 < tau_j < 1/2 }.
struct Lattice {
  int dim = 0;
  Eigen::MatrixXd basis;       // columns a_j
  Eigen::MatrixXd dual_basis;  // columns b_j, <b_i, a_j> = 2 pi delta_ij
  double cell_volume = 0.0;
  double r0 = 0.0;  // half the shortest nonzero dual vector
  double r1 = 0.0;  // half the cell diameter

  /// Fractional coordinates tau with x = basis * tau.
  Eigen::VectorXd to_fractional(const Eigen::VectorXd& x) const;

  /// max_{i,j} |<b_i, a_j> - 2 pi delta_ij|
  double duality_residual() const;
};

/// Dual multi-indices |nu_j| <= shell are enumerated for r0. Three shells are
/// enough for bases with condition number up to about ten.
inline constexpr int kDualShell = 3;

Lattice build_lattice(const std::vector<Eigen::VectorXd>& basis);
Lattice build_lattice(const Eigen::MatrixXd& basis_columns);
Lattice unit_lattice(int dim);

}  // namespace perihom
