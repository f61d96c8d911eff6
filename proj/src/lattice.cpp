#include "perihom/lattice.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "perihom/error.hpp"

namespace perihom {

namespace {

// Calls f(nu) for every integer vector with entries in [-radius, radius].
template <typename F>
void for_each_multi_index(int dim, int radius, F&& f) {
  Eigen::VectorXi nu = Eigen::VectorXi::Constant(dim, -radius);
  while (true) {
    f(nu);
    int j = 0;
    while (j < dim && nu[j] == radius) {
      nu[j] = -radius;
      ++j;
    }
    if (j == dim) return;
    ++nu[j];
  }
}

}  // namespace

Eigen::VectorXd Lattice::to_fractional(const Eigen::VectorXd& x) const {
  return dual_basis.transpose() * x / (2.0 * std::numbers::pi);
}

double Lattice::duality_residual() const {
  const Eigen::MatrixXd pairing = dual_basis.transpose() * basis;
  const Eigen::MatrixXd target = 2.0 * std::numbers::pi * Eigen::MatrixXd::Identity(dim, dim);
  return (pairing - target).cwiseAbs().maxCoeff();
}

Lattice build_lattice(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1 || a.rows() > 3) {
    throw Error(ErrorKind::degenerate_lattice, "lattice basis must be d vectors in R^d with 1 <= d <= 3");
  }
  if (!a.allFinite()) {
    throw Error(ErrorKind::degenerate_lattice, "lattice basis has non-finite entries");
  }
  const int d = static_cast<int>(a.rows());
  const double det = a.determinant();
  double scale = 1.0;
  for (int j = 0; j < d; ++j) scale *= a.col(j).norm();
  if (scale == 0.0 || std::abs(det) <= 1e-12 * scale) {
    throw Error(ErrorKind::degenerate_lattice, "lattice basis vectors are linearly dependent");
  }

  Lattice lat;
  lat.dim = d;
  lat.basis = a;
  lat.dual_basis = 2.0 * std::numbers::pi * a.inverse().transpose();
  lat.cell_volume = std::abs(det);

  double shortest = std::numeric_limits<double>::infinity();
  for_each_multi_index(d, kDualShell, [&](const Eigen::VectorXi& nu) {
    if (nu.isZero()) return;
    shortest = std::min(shortest, (lat.dual_basis * nu.cast<double>()).norm());
  });
  lat.r0 = 0.5 * shortest;

  // The diameter of the parallelotope is attained between opposite vertices,
  // i.e. along A s with s in {-1, 0, 1}^d.
  double diameter = 0.0;
  for_each_multi_index(d, 1, [&](const Eigen::VectorXi& s) {
    diameter = std::max(diameter, (a * s.cast<double>()).norm());
  });
  lat.r1 = 0.5 * diameter;
  return lat;
}

Lattice build_lattice(const std::vector<Eigen::VectorXd>& basis) {
  const int d = static_cast<int>(basis.size());
  Eigen::MatrixXd a(d, d);
  for (int j = 0; j < d; ++j) {
    if (basis[j].size() != d) {
      throw Error(ErrorKind::degenerate_lattice, "lattice basis vector has wrong dimension");
    }
    a.col(j) = basis[j];
  }
  return build_lattice(a);
}

Lattice unit_lattice(int dim) { return build_lattice(Eigen::MatrixXd::Identity(dim, dim)); }

}  // namespace perihom
