#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perihom/grid.hpp"
#include "perihom/lattice.hpp"

namespace perihom {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 6, 6>;

/// Lattice-periodic symmetric positive definite m x m matrix function,
/// described in fractional coordinates tau (period 1 in every tau_j).
class PeriodicCoefficient {
 public:
  using Function = std::function<SmallMatrix(const Point& tau)>;

  PeriodicCoefficient() = default;
  PeriodicCoefficient(int size, Function f, std::string name);

  int size() const { return size_; }
  const std::string& name() const { return name_; }
  /// Evaluates at arbitrary fractional coordinates (wrapped into [0,1)).
  SmallMatrix at_fractional(const Point& tau) const;

 private:
  int size_ = 0;
  Function f_;
  std::string name_;
};

PeriodicCoefficient constant_coefficient(const Eigen::MatrixXd& value);
/// value(tau) = (frac(tau_axis) < fraction ? low : high) * I_m
PeriodicCoefficient laminate_coefficient(int m, double low, double high, double fraction = 0.5, int axis = 0);
/// Alternating low/high on the 2^d sub-cells of side 1/2.
PeriodicCoefficient checkerboard_coefficient(int m, int dim, double low, double high);
/// (mean + amplitude cos(2 pi tau_axis)) * I_m
PeriodicCoefficient trig_coefficient(int m, double mean, double amplitude, int axis = 0);
/// diag(a0 + a1 cos(2 pi tau_2), b0 + b1 cos(2 pi tau_1)) in two dimensions.
/// Each column depends only on the other variable, so div of every column vanishes.
PeriodicCoefficient divfree_diag_coefficient(double a0, double a1, double b0, double b1);
/// Piecewise constant on a K^d grid of sub-cells. `values` holds either K^d
/// scalars (times I_m) or K^d column-major m x m blocks, sub-cell index
/// running fastest in tau_1.
PeriodicCoefficient sampled_coefficient(int m, int dim, int per_dim, const std::vector<double>& values);

/// Per-element m x m matrices, column-major, element-major.
struct ElementCoefficients {
  int m = 0;
  std::size_t count = 0;
  std::vector<double> data;

  Eigen::Map<const Eigen::MatrixXd> at(std::size_t e) const {
    return Eigen::Map<const Eigen::MatrixXd>(data.data() + e * m * m, m, m);
  }
  Eigen::Map<Eigen::MatrixXd> at(std::size_t e) { return Eigen::Map<Eigen::MatrixXd>(data.data() + e * m * m, m, m); }
};

/// c = min eigenvalue, c_tilde = max eigenvalue over the samples, so that
/// |g|_inf = c_tilde and |g^{-1}|_inf = 1/c.
struct CoefficientBounds {
  double c = 0.0;
  double c_tilde = 0.0;
};

/// g(x / eps) at element midpoints, with x / eps mapped to fractional
/// coordinates through the lattice basis. Each sample must be symmetric to
/// 1e-14 relative and positive definite; otherwise Error(invalid_coefficient).
ElementCoefficients sample_coefficient(const PeriodicCoefficient& g, const StructuredGrid& grid, double eps,
                                       const Lattice& lattice);

/// The same constant matrix on every element.
ElementCoefficients uniform_coefficient(const Eigen::MatrixXd& value, std::size_t count);

CoefficientBounds coefficient_bounds(const ElementCoefficients& g);

}  // namespace perihom
