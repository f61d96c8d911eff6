#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perihom/assembly.hpp"
#include "perihom/cg.hpp"
#include "perihom/coefficient.hpp"
#include "perihom/field.hpp"
#include "perihom/symbol.hpp"

namespace perihom {

enum class ProblemKind { neumann_eps, neumann_eff, periodic_eps, periodic_eff };

const char* to_string(ProblemKind kind);
bool is_periodic(ProblemKind kind);

/// b(D)^* g b(D) u + lambda u = F with natural boundary conditions on a
/// rectangle (Neumann kinds) or on a torus (periodic kinds).
struct ProblemSpec {
  ProblemKind kind = ProblemKind::neumann_eps;
  StructuredGrid grid;
  ElementCoefficients g;
  double lambda = 1.0;
  Field rhs;  // nodal, n components
  double garding_c1 = 1.0;
  double garding_c2 = 0.0;
  double tol = 1e-10;
  std::string preconditioner = "spectral";  // spectral | jacobi | none
  /// Constant matrix behind the spectral preconditioner; empty means the
  /// element mean of g.
  Eigen::MatrixXd reference;
};

/// g(x / eps) sampled on the grid. For periodic kinds the torus side
/// lengths must be integer multiples of the eps-cell.
ProblemSpec oscillating_problem(ProblemKind kind, const StructuredGrid& grid, const PeriodicCoefficient& g,
                                double eps, const Lattice& lattice, double lambda, Field rhs);
ProblemSpec effective_problem(ProblemKind kind, const StructuredGrid& grid, const Eigen::MatrixXd& g_eff,
                              double lambda, Field rhs);

struct AssembledProblem {
  LocalForm form;
  StencilOperator matrix;
  std::vector<double> load;  // int <F, phi_i>
};

/// Q1 stiffness plus lambda mass, and the consistent load vector. Rejects
/// lambda <= C2 |g^{-1}|^{-1} when C2 > 0.
AssembledProblem assemble_problem(const ProblemSpec& spec, const SymbolOperator& op);

/// c_lambda = min(C1 c, lambda - C2 c), c the smallest eigenvalue of g.
double coercivity_constant(const ProblemSpec& spec);

struct Solution {
  Field u;
  CgReport report;
  double energy = 0.0;  // a[u,u] + lambda |u|^2
  double work = 0.0;    // (F, u)
};

/// Requires lambda > 0. Throws Error(configuration) for lambda = 0 (use
/// solve_lambda0) and SolverFailure when CG stalls.
Solution solve_problem(const ProblemSpec& spec, const SymbolOperator& op);

/// z(x) = offset + gradient * x, gradient n x d.
struct AffineField {
  Eigen::VectorXd offset;
  Eigen::MatrixXd gradient;
};

/// L2-orthonormal fields spanning {z : b(D) z = 0} on the grid.
struct KernelBasis {
  std::vector<Field> basis;
  Eigen::MatrixXd gram;  // Gram matrix after orthonormalization

  std::size_t size() const { return basis.size(); }
  /// u -= sum_k (u, z_k) z_k
  void project_out(Field& u) const;
};

/// Affine fields annihilated by b(D): the constants plus z = G x with
/// sum_l b_l G e_l = 0 (rigid rotations for plane elasticity).
std::vector<AffineField> affine_kernel(const SymbolOperator& op);

/// Uses `declared` when non-empty (each must satisfy |b(D) z| <= 1e-8 |z|,
/// else Error(invalid_kernel)), affine_kernel(op) otherwise.
KernelBasis build_kernel(const SymbolOperator& op, const StructuredGrid& grid,
                         const std::vector<AffineField>& declared = {});

/// lambda = 0 Neumann problem on the complement of the kernel: F is
/// projected first, CG runs deflated, and the result is orthogonal to every
/// z_k.
Solution solve_lambda0(const ProblemSpec& spec, const SymbolOperator& op, const KernelBasis& kernel);

}  // namespace perihom
