#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace perihom {

/// First-order homogeneous operator b(D) = sum_l b_l D_l with constant real
/// (m x n) matrices b_l, m >= n.
///
/// All discrete forms use the real gradient: b(grad) = sum_l b_l d_l. For real
/// b_l the factor -i in D = -i grad cancels in b(D)^* g b(D), and the periodic
/// corrector picks up a matching factor i, so the real formulation reproduces
/// the same effective matrix and first-order approximations.
struct SymbolOperator {
  int dim = 0;
  int rows = 0;  // m
  int cols = 0;  // n
  std::vector<Eigen::MatrixXd> matrices;  // b_1 .. b_d
  std::string name = "custom";

  /// Column c of the (m x d) matrix whose l-th column is b_l e_c, i.e. the
  /// action of b(grad) on phi * e_c is block(c) * grad phi.
  Eigen::MatrixXd block(int component) const;
};

struct EllipticityConstants {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double garding_c1 = 1.0;
  double garding_c2 = 0.0;
};

/// Throws Error(component_mismatch) when the shapes are inconsistent or m < n.
SymbolOperator make_symbol(std::vector<Eigen::MatrixXd> matrices, std::string name = "custom");

/// n = 1, m = d, b_l = e_l.
SymbolOperator scalar_gradient(int dim);

/// Plane elasticity: n = 2, m = 3, b(xi) rows (xi1, 0), (0, xi2),
/// (xi2, xi1)/sqrt(2), so that |b(D)u|^2 is the squared strain.
SymbolOperator elasticity_2d();

/// b(xi) = sum_l b_l xi_l.
Eigen::MatrixXd symbol_eval(const SymbolOperator& op, const Eigen::VectorXd& xi);

/// Sphere sampling of the extreme eigenvalues of b(theta)^* b(theta): uniform
/// angles for d = 2, Fibonacci points for d = 3, followed by a local
/// refinement of the minimizing direction. Throws Error(non_elliptic) naming
/// the direction when alpha0 drops below 1e-10.
EllipticityConstants check_rank_condition(const SymbolOperator& op, int samples = 1000);

/// Unit directions used by check_rank_condition (exposed for tests).
std::vector<Eigen::VectorXd> sphere_directions(int dim, int samples);

}  // namespace perihom
