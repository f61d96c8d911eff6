#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "perihom/coefficient.hpp"
#include "perihom/field.hpp"
#include "perihom/lattice.hpp"
#include "perihom/symbol.hpp"

namespace perihom {

struct CellOptions {
  int nodes_per_dim = 0;  // 0: 512 in 1D, 256 in 2D, 32 in 3D
  double tol = 1e-10;
  std::string preconditioner = "spectral";  // spectral | jacobi | none
};

/// Periodic corrector Lambda (n x m) on the cell and the matrices derived
/// from it.
struct CellSolution {
  Lattice lattice;
  SymbolOperator op;
  StructuredGrid grid;
  /// Column j of Lambda, component c, stored at component c + n * j.
  Field lambda;
  ElementCoefficients g;
  /// g (b(grad) Lambda + 1_m) per element.
  ElementCoefficients g_tilde;
  Eigen::MatrixXd g_eff;
  Eigen::MatrixXd g_bar;
  Eigen::MatrixXd g_under;
  CoefficientBounds bounds;
  double lambda_sup = 0.0;  // max nodal |Lambda| (Frobenius); an estimate for rough g
  double lambda_l2 = 0.0;
  double dlambda_l2 = 0.0;
  std::vector<int> iterations;
  std::vector<double> residuals;

  int n() const { return op.cols; }
  int m() const { return op.rows; }
  /// Column j of Lambda as an n-component field.
  Field column(int j) const;
};

/// Solves, for j = 1..m, the periodic problem
///   int <g (b(grad) v_j + e_j), b(grad) eta> = 0 for all periodic Q1 eta,
/// with zero-mean v_j. Throws SolverFailure if CG stalls.
CellSolution solve_cell_problem(const PeriodicCoefficient& g, const SymbolOperator& op, const Lattice& lattice,
                                const CellOptions& options = {});

/// Cell average of g_tilde, symmetrized. Throws Error(solver_failure) if the
/// result is not positive definite.
Eigen::MatrixXd effective_matrix(const ElementCoefficients& g_tilde);

/// (mean g, (mean g^{-1})^{-1}).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> voigt_reuss(const ElementCoefficients& g);

struct StructuralReport {
  double dlambda_l2 = 0.0;
  double dlambda_bound = 0.0;
  bool dlambda_ok = false;
  double lambda_l2 = 0.0;
  double lambda_bound = 0.0;
  bool lambda_ok = false;
  double lambda_sup_estimate = 0.0;
  double g_eff_norm = 0.0;
  double g_sup = 0.0;
  bool g_eff_ok = false;
  double g_eff_inverse_norm = 0.0;
  double g_inverse_sup = 0.0;
  bool g_eff_inverse_ok = false;
  double voigt_gap = 0.0;   // min eig(g_bar - g_eff)
  double reuss_gap = 0.0;   // min eig(g_eff - g_under)
  bool bounded_case_dim = false;       // d <= 2
  bool bounded_case_scalar = false;    // b(D) = D with real g
  bool bounded_case_reuss = false;     // g_eff = g_under
  bool lambda_bounded() const { return bounded_case_dim || bounded_case_scalar || bounded_case_reuss; }
};

/// Norm bounds on Lambda and g_eff in terms of alpha0 and the coefficient
/// bounds, checked with a 1e-6 relative slack, and the sufficient conditions
/// for Lambda to be bounded.
StructuralReport structural_diagnostics(const CellSolution& sol, double alpha0);

}  // namespace perihom
