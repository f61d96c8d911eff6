#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "perihom/cell_problem.hpp"
#include "perihom/error.hpp"

using namespace perihom;

constexpr double kPi = std::numbers::pi;

namespace {

double min_eig(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  return es.eigenvalues()(0);
}

CellOptions nodes(int n) {
  CellOptions o;
  o.nodes_per_dim = n;
  return o;
}

}  // namespace

TEST(CellProblem, ConstantCoefficientHasZeroCorrector) {
  Eigen::MatrixXd g(2, 2);
  g << 3.0, 0.5, 0.5, 2.0;
  const CellSolution sol = solve_cell_problem(constant_coefficient(g), scalar_gradient(2), unit_lattice(2), nodes(16));
  EXPECT_LT(sol.lambda_sup, 1e-12);
  EXPECT_TRUE(sol.g_eff.isApprox(g, 1e-12));
  EXPECT_TRUE(sol.g_bar.isApprox(g, 1e-12));
  EXPECT_TRUE(sol.g_under.isApprox(g, 1e-12));
  const StructuralReport r = structural_diagnostics(sol, 1.0);
  EXPECT_TRUE(r.dlambda_ok && r.lambda_ok && r.g_eff_ok && r.g_eff_inverse_ok);
}

TEST(CellProblem, OneDimensionalHarmonicMean) {
  const CellSolution sol =
      solve_cell_problem(trig_coefficient(1, 2.0, 1.0), scalar_gradient(1), unit_lattice(1), nodes(512));
  // Oracle: 1 / int_0^1 dx / (2 + cos 2 pi x) = sqrt(3).
  EXPECT_NEAR(sol.g_eff(0, 0), std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(sol.g_eff(0, 0), sol.g_under(0, 0), 1e-9);
  // Lambda' = g0 / g - 1 at the element next to the origin.
  const Field bd = apply_bD(sol.op, sol.column(0));
  const double x = sol.grid.element_midpoint(0)[0];
  EXPECT_NEAR(bd(0, 0), std::sqrt(3.0) / (2.0 + std::cos(2 * kPi * x)) - 1.0, 1e-5);
  EXPECT_NEAR(std::sqrt(3.0) / 3.0 - 1.0, -0.42264973, 1e-8);
  double mean = 0.0;
  for (double v : sol.lambda.values()) mean += v;
  EXPECT_LT(std::abs(mean) / sol.grid.num_nodes(), 1e-12);
  const StructuralReport r = structural_diagnostics(sol, 1.0);
  EXPECT_TRUE(r.bounded_case_dim);
  EXPECT_TRUE(r.bounded_case_reuss);
  EXPECT_TRUE(std::isfinite(r.lambda_sup_estimate));
}

TEST(CellProblem, OneDimensionalSolutionMatchesAntiderivative) {
  const CellSolution sol =
      solve_cell_problem(trig_coefficient(1, 2.0, 1.0), scalar_gradient(1), unit_lattice(1), nodes(256));
  // Lambda(x) = int_0^x (g0/g - 1) - mean, computed by fine trapezoid sums.
  const int fine = 200000;
  std::vector<double> prim(fine + 1, 0.0);
  const double g0 = std::sqrt(3.0);
  auto f = [&](double t) { return g0 / (2.0 + std::cos(2 * kPi * t)) - 1.0; };
  for (int k = 0; k < fine; ++k) prim[k + 1] = prim[k] + 0.5 / fine * (f(double(k) / fine) + f(double(k + 1) / fine));
  double mean = 0.0;
  for (int k = 0; k < fine; ++k) mean += 0.5 * (prim[k] + prim[k + 1]) / fine;
  for (std::size_t p = 0; p < sol.grid.num_nodes(); p += 16) {
    const double x = sol.grid.node_coord(p)[0];
    const double exact = prim[static_cast<int>(std::lround(x * fine))] - mean;
    EXPECT_NEAR(sol.lambda(p, 0), exact, 1e-5);
  }
}

TEST(CellProblem, LaminateEffectiveMatrix) {
  const CellSolution sol = solve_cell_problem(laminate_coefficient(2, 1.0, 4.0), scalar_gradient(2), unit_lattice(2),
                                              nodes(256));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected(0, 0) = 2.0 / (1.0 + 0.25);
  expected(1, 1) = 2.5;
  EXPECT_LT((sol.g_eff - expected).norm(), 1e-4);
  EXPECT_NEAR(sol.g_bar(0, 0), 2.5, 1e-12);
  EXPECT_NEAR(sol.g_under(0, 0), 1.6, 1e-12);
}

TEST(CellProblem, DivergenceFreeColumnsGiveZeroCorrector) {
  const CellSolution sol = solve_cell_problem(divfree_diag_coefficient(2.0, 0.7, 3.0, -1.1), scalar_gradient(2),
                                              unit_lattice(2), nodes(64));
  EXPECT_LE(std::hypot(sol.lambda_l2, sol.dlambda_l2), 1e-6);
  EXPECT_LT((sol.g_eff - sol.g_bar).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(CellProblem, CheckerboardIsIsotropicGeometricMean) {
  const CellSolution sol = solve_cell_problem(checkerboard_coefficient(2, 2, 1.0, 4.0), scalar_gradient(2),
                                              unit_lattice(2), nodes(128));
  EXPECT_NEAR(sol.g_eff(0, 0), sol.g_eff(1, 1), 1e-8);
  EXPECT_NEAR(sol.g_eff(0, 1), 0.0, 1e-8);
  // Two-phase checkerboard in 2D: sqrt(1 * 4). The Q1 corner singularity
  // limits agreement to about a percent at this resolution.
  EXPECT_NEAR(sol.g_eff(0, 0), 2.0, 0.03);
}

TEST(CellProblem, VoigtReussSandwichOnLibrary) {
  std::vector<std::pair<PeriodicCoefficient, SymbolOperator>> cases = {
      {laminate_coefficient(2, 1.0, 4.0, 0.3, 1), scalar_gradient(2)},
      {checkerboard_coefficient(2, 2, 1.0, 10.0), scalar_gradient(2)},
      {trig_coefficient(2, 3.0, 2.5, 0), scalar_gradient(2)},
      {divfree_diag_coefficient(2.0, 1.0, 2.0, 1.5), scalar_gradient(2)},
      {checkerboard_coefficient(3, 2, 1.0, 4.0), elasticity_2d()},
      {laminate_coefficient(3, 1.0, 5.0), elasticity_2d()},
      {sampled_coefficient(2, 2, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9}), scalar_gradient(2)},
  };
  for (const auto& [g, op] : cases) {
    const CellSolution sol = solve_cell_problem(g, op, unit_lattice(2), nodes(32));
    EXPECT_GE(min_eig(sol.g_bar - sol.g_eff), -1e-8) << g.name();
    EXPECT_GE(min_eig(sol.g_eff - sol.g_under), -1e-8) << g.name();
    EXPECT_GE(min_eig(sol.g_bar - sol.g_under), -1e-10) << g.name();
    const StructuralReport r = structural_diagnostics(sol, check_rank_condition(op).alpha0);
    EXPECT_TRUE(r.dlambda_ok) << g.name() << " " << r.dlambda_l2 << " " << r.dlambda_bound;
    EXPECT_TRUE(r.lambda_ok) << g.name();
    EXPECT_TRUE(r.g_eff_ok) << g.name();
    EXPECT_TRUE(r.g_eff_inverse_ok) << g.name();
    double mean = 0.0;
    for (std::size_t p = 0; p < sol.grid.num_nodes(); ++p) mean += sol.lambda(p, 0);
    EXPECT_LE(std::abs(mean / sol.grid.num_nodes()), 1e-12);
  }
}

TEST(CellProblem, SkewedLatticeLaminate) {
  // Layers normal to the dual vector b_1: the effective matrix is the
  // harmonic mean along b_1 and the arithmetic mean across it.
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  const Lattice lat = build_lattice(a);
  const CellSolution sol =
      solve_cell_problem(laminate_coefficient(2, 1.0, 4.0), scalar_gradient(2), lat, nodes(64));
  const Eigen::Vector2d normal = lat.dual_basis.col(0).normalized();
  const Eigen::Vector2d along(-normal(1), normal(0));
  EXPECT_NEAR(normal.dot(sol.g_eff * normal), 1.6, 1e-8);
  EXPECT_NEAR(along.dot(sol.g_eff * along), 2.5, 1e-8);
  EXPECT_NEAR(along.dot(sol.g_eff * normal), 0.0, 1e-8);
}

TEST(CellProblem, RefinementOrderOnSmoothCoefficient) {
  const PeriodicCoefficient g(
      1, [](const Point& t) {
        SmallMatrix v(1, 1);
        v(0, 0) = 2.0 + std::cos(2 * kPi * t[0]) * std::cos(2 * kPi * t[1]);
        return v;
      },
      "smooth");
  // Scalar coefficient times identity in m = 2.
  const PeriodicCoefficient g2(
      2, [&](const Point& t) { return SmallMatrix(g.at_fractional(t)(0, 0) * Eigen::MatrixXd::Identity(2, 2)); },
      "smooth2");
  std::vector<double> g00;
  for (int n : {16, 32, 64, 128}) {
    g00.push_back(solve_cell_problem(g2, scalar_gradient(2), unit_lattice(2), nodes(n)).g_eff(0, 0));
  }
  const double order = std::log2(std::abs(g00[1] - g00[2]) / std::abs(g00[2] - g00[3]));
  EXPECT_GE(order, 1.8);
}

TEST(CellProblem, PreconditionersAgree) {
  CellOptions jac = nodes(32);
  jac.preconditioner = "jacobi";
  const auto g = checkerboard_coefficient(2, 2, 1.0, 4.0);
  const CellSolution a = solve_cell_problem(g, scalar_gradient(2), unit_lattice(2), nodes(32));
  const CellSolution b = solve_cell_problem(g, scalar_gradient(2), unit_lattice(2), jac);
  EXPECT_LT((a.g_eff - b.g_eff).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(a.iterations[0], b.iterations[0]);
}

TEST(CellProblem, SizeMismatchRejected) {
  try {
    solve_cell_problem(trig_coefficient(1, 2.0, 1.0), scalar_gradient(2), unit_lattice(2), nodes(16));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::component_mismatch);
  }
}
