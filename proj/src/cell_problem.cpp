#include "perihom/cell_problem.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "perihom/assembly.hpp"
#include "perihom/cg.hpp"
#include "perihom/error.hpp"
#include "perihom/parallel.hpp"
#include "perihom/spectral.hpp"

namespace perihom {

namespace {

int default_nodes(int d) { return d == 1 ? 512 : d == 2 ? 256 : 32; }

// Load vector of the cell problem for column j: -int <g e_j, b(grad) phi_a e_c>.
std::vector<double> cell_rhs(const StructuredGrid& grid, const SymbolOperator& op, const ElementCoefficients& g,
                             int column) {
  const int d = grid.dim();
  const int n = op.cols;
  const int corners = grid.nodes_per_element();
  std::vector<Eigen::MatrixXd> bj(d, Eigen::MatrixXd::Zero(op.rows, n));
  for (int j = 0; j < d; ++j) {
    for (int l = 0; l < d; ++l) bj[j] += grid.jacobian_inverse()(j, l) * op.matrices[l];
  }
  // int over the reference element of d_k phi_a is +-2^{1-d}.
  const double weight = -grid.element_volume() / (corners / 2);
  std::vector<double> rhs(grid.num_nodes() * n, 0.0);
  std::array<std::size_t, 8> nodes;
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    const Eigen::VectorXd w = g.at(e).col(column);
    grid.element_nodes(e, nodes);
    for (int k = 0; k < d; ++k) {
      const Eigen::VectorXd t = bj[k].transpose() * w;
      for (int a = 0; a < corners; ++a) {
        const double s = (a >> k) & 1 ? weight : -weight;
        for (int c = 0; c < n; ++c) rhs[nodes[a] * n + c] += s * t(c);
      }
    }
  }
  return rhs;
}

bool is_scalar_gradient(const SymbolOperator& op) {
  if (op.cols != 1 || op.rows != op.dim) return false;
  for (int l = 0; l < op.dim; ++l) {
    if (!op.matrices[l].isApprox(Eigen::MatrixXd::Identity(op.dim, op.dim).col(l), 0.0)) return false;
  }
  return true;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

Field CellSolution::column(int j) const {
  const int nn = n();
  Field out(grid, nn);
  for (std::size_t p = 0; p < grid.num_nodes(); ++p) {
    for (int c = 0; c < nn; ++c) out(p, c) = lambda(p, c + nn * j);
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> voigt_reuss(const ElementCoefficients& g) {
  const int m = g.m;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd mean_inv = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t e = 0; e < g.count; ++e) {
    const auto ge = g.at(e);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ge);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      throw Error(ErrorKind::invalid_coefficient, "singular coefficient sample at element " + std::to_string(e));
    }
    mean += ge;
    mean_inv += ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  }
  mean /= static_cast<double>(g.count);
  mean_inv /= static_cast<double>(g.count);
  Eigen::MatrixXd under = mean_inv.inverse();
  return {0.5 * (mean + mean.transpose()), 0.5 * (under + under.transpose())};
}

Eigen::MatrixXd effective_matrix(const ElementCoefficients& g_tilde) {
  const int m = g_tilde.m;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t e = 0; e < g_tilde.count; ++e) sum += g_tilde.at(e);
  sum /= static_cast<double>(g_tilde.count);
  const Eigen::MatrixXd g0 = 0.5 * (sum + sum.transpose());
  if (!(min_eigenvalue(g0) > 0.0)) {
    throw Error(ErrorKind::solver_failure, "effective matrix is not positive definite; the cell solve is inaccurate");
  }
  return g0;
}

CellSolution solve_cell_problem(const PeriodicCoefficient& g, const SymbolOperator& op, const Lattice& lattice,
                                const CellOptions& options) {
  if (op.dim != lattice.dim) throw Error(ErrorKind::component_mismatch, "operator and lattice dimensions differ");
  if (g.size() != op.rows) {
    throw Error(ErrorKind::component_mismatch, "coefficient size " + std::to_string(g.size()) +
                                                   " does not match m = " + std::to_string(op.rows));
  }
  const int d = op.dim;
  const int n = op.cols;
  const int m = op.rows;
  CellSolution sol;
  sol.lattice = lattice;
  sol.op = op;
  sol.grid = StructuredGrid::cell(lattice, options.nodes_per_dim > 0 ? options.nodes_per_dim : default_nodes(d));
  sol.g = sample_coefficient(g, sol.grid, 1.0, lattice);
  sol.bounds = coefficient_bounds(sol.g);
  std::tie(sol.g_bar, sol.g_under) = voigt_reuss(sol.g);

  const StencilOperator a = assemble(make_form(sol.grid, op, sol.g, 0.0));
  const LinearMap map = [&a](std::span<const double> x, std::span<double> y) { a.apply(x, y); };

  std::unique_ptr<PeriodicSpectralInverse> spectral;
  LinearMap precond;
  if (options.preconditioner == "spectral") {
    spectral = std::make_unique<PeriodicSpectralInverse>(assemble(make_uniform_form(sol.grid, op, sol.g_bar, 0.0)));
    precond = spectral->as_map();
  } else if (options.preconditioner == "jacobi") {
    auto diag = std::make_shared<std::vector<double>>(a.diagonal());
    precond = [diag](std::span<const double> x, std::span<double> y) {
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / (*diag)[i];
    };
  } else if (options.preconditioner != "none") {
    throw Error(ErrorKind::configuration, "unknown preconditioner '" + options.preconditioner + "'");
  }

  // Null space on the periodic grid: constant fields, one per component.
  std::vector<std::vector<double>> constants;
  for (int c = 0; c < n; ++c) {
    std::vector<double> v(a.size(), 0.0);
    for (std::size_t i = c; i < v.size(); i += n) v[i] = 1.0;
    constants.push_back(std::move(v));
  }
  const Deflation deflation = Deflation::from_vectors(std::move(constants));

  CgOptions cg;
  cg.rel_tol = options.tol;
  sol.lambda = Field(sol.grid, n * m);
  for (int j = 0; j < m; ++j) {
    const std::vector<double> rhs = cell_rhs(sol.grid, op, sol.g, j);
    std::vector<double> x(a.size(), 0.0);
    const CgReport rep = solve_spd(map, rhs, x, precond, &deflation, cg);
    sol.iterations.push_back(rep.iterations);
    sol.residuals.push_back(rep.relative_residual);
    // Exact zero mean per component.
    for (int c = 0; c < n; ++c) {
      double mean = 0.0;
      for (std::size_t p = 0; p < sol.grid.num_nodes(); ++p) mean += x[p * n + c];
      mean /= static_cast<double>(sol.grid.num_nodes());
      for (std::size_t p = 0; p < sol.grid.num_nodes(); ++p) sol.lambda(p, c + n * j) = x[p * n + c] - mean;
    }
  }

  // g_tilde = g (b(grad) Lambda + 1) element by element.
  sol.g_tilde.m = m;
  sol.g_tilde.count = sol.grid.num_elements();
  sol.g_tilde.data.resize(sol.g_tilde.count * m * m);
  std::vector<Field> bd;
  for (int j = 0; j < m; ++j) bd.push_back(apply_bD(op, sol.column(j)));
  for (std::size_t e = 0; e < sol.g_tilde.count; ++e) {
    Eigen::MatrixXd bl = Eigen::MatrixXd::Identity(m, m);
    for (int j = 0; j < m; ++j) {
      for (int r = 0; r < m; ++r) bl(r, j) += bd[j](e, r);
    }
    sol.g_tilde.at(e) = sol.g.at(e) * bl;
  }
  sol.g_eff = effective_matrix(sol.g_tilde);

  sol.lambda_l2 = l2_norm(sol.lambda);
  sol.dlambda_l2 = h1_seminorm(sol.lambda);
  for (std::size_t p = 0; p < sol.grid.num_nodes(); ++p) {
    double s = 0.0;
    for (int c = 0; c < n * m; ++c) s += sol.lambda(p, c) * sol.lambda(p, c);
    sol.lambda_sup = std::max(sol.lambda_sup, std::sqrt(s));
  }
  return sol;
}

StructuralReport structural_diagnostics(const CellSolution& sol, double alpha0) {
  StructuralReport r;
  const double slack = 1.0 + 1e-6;
  const double g_sup = sol.bounds.c_tilde;
  const double g_inv_sup = 1.0 / sol.bounds.c;
  const double common = std::sqrt(sol.lattice.cell_volume * sol.m() / alpha0 * g_sup * g_inv_sup);
  r.dlambda_l2 = sol.dlambda_l2;
  r.dlambda_bound = common;
  r.dlambda_ok = r.dlambda_l2 <= r.dlambda_bound * slack;
  r.lambda_l2 = sol.lambda_l2;
  r.lambda_bound = common / (2.0 * sol.lattice.r0);
  r.lambda_ok = r.lambda_l2 <= r.lambda_bound * slack;
  r.lambda_sup_estimate = sol.lambda_sup;
  r.g_eff_norm = spectral_norm(sol.g_eff);
  r.g_sup = g_sup;
  r.g_eff_ok = r.g_eff_norm <= g_sup * slack;
  r.g_eff_inverse_norm = spectral_norm(sol.g_eff.inverse());
  r.g_inverse_sup = g_inv_sup;
  r.g_eff_inverse_ok = r.g_eff_inverse_norm <= g_inv_sup * slack;
  r.voigt_gap = min_eigenvalue(sol.g_bar - sol.g_eff);
  r.reuss_gap = min_eigenvalue(sol.g_eff - sol.g_under);
  r.bounded_case_dim = sol.op.dim <= 2;
  r.bounded_case_scalar = is_scalar_gradient(sol.op);
  const double scale = sol.g_eff.cwiseAbs().maxCoeff();
  r.bounded_case_reuss = (sol.g_eff - sol.g_under).cwiseAbs().maxCoeff() <= 1e-8 * scale;
  return r;
}

}  // namespace perihom
