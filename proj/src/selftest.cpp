#include "perihom/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "perihom/approximation.hpp"
#include "perihom/cell_problem.hpp"
#include "perihom/config.hpp"
#include "perihom/harness.hpp"
#include "perihom/smoothing.hpp"
#include "perihom/solvers.hpp"

namespace perihom {

namespace {

using std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(3);
  o << std::scientific << v;
  return o.str();
}

StructuredGrid square(int n) {
  const double len[2] = {1.0, 1.0};
  const int el[2] = {n, n};
  return StructuredGrid::rectangle(len, el);
}

CellSolution cell(const PeriodicCoefficient& g, int dim, int nodes) {
  CellOptions o;
  o.nodes_per_dim = nodes;
  return solve_cell_problem(g, scalar_gradient(dim), unit_lattice(dim), o);
}

SelftestResult lattice_radii() {
  const Lattice l = unit_lattice(2);
  const double err = std::max(std::abs(l.r0 - pi), std::abs(l.r1 - std::sqrt(0.5)));
  return {"unit lattice radii r0 = pi, r1 = sqrt(2)/2", err < 1e-12, "error " + fmt(err)};
}

SelftestResult harmonic_mean_1d() {
  const double err = std::abs(cell(trig_coefficient(1, 2.0, 1.0), 1, 512).g_eff(0, 0) - std::sqrt(3.0));
  return {"1D g = 2 + cos 2 pi x gives g0 = sqrt 3", err <= 1e-6, "error " + fmt(err)};
}

SelftestResult laminate() {
  const CellSolution s = cell(laminate_coefficient(2, 1.0, 4.0), 2, 64);
  const double err = (s.g_eff - Eigen::Vector2d(1.6, 2.5).asDiagonal().toDenseMatrix()).norm();
  return {"laminate {1, 4} gives g0 = diag(1.6, 2.5)", err <= 1e-4, "error " + fmt(err)};
}

SelftestResult sandwich() {
  const CellSolution s = cell(checkerboard_coefficient(2, 2, 1.0, 10.0), 2, 32);
  const double v = (s.g_bar - s.g_eff).selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
  const double r = (s.g_eff - s.g_under).selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
  return {"Voigt-Reuss sandwich for the checkerboard", std::min(v, r) >= -1e-8,
          "min gaps " + fmt(v) + ", " + fmt(r)};
}

SelftestResult constant_corrector() {
  const CellSolution s = cell(constant_coefficient(Eigen::Matrix2d{{2.0, 0.3}, {0.3, 1.0}}), 2, 16);
  return {"constant coefficient gives Lambda = 0", s.lambda_l2 <= 1e-12, "|Lambda| = " + fmt(s.lambda_l2)};
}

SelftestResult divfree() {
  const CellSolution s = cell(divfree_diag_coefficient(2.0, 1.0, 3.0, 1.0), 2, 64);
  const double err = std::max(s.lambda_l2 + s.dlambda_l2, (s.g_eff - s.g_bar).norm());
  return {"divergence-free columns give Lambda = 0, g0 = mean g", err <= 1e-6, "error " + fmt(err)};
}

SelftestResult smoothing_contraction() {
  const StructuredGrid g = square(64);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Field f(g, 1);
    for (double& v : f.values()) v = u(rng);
    const double ratio = l2_norm(steklov_smooth(f, 0.125, unit_lattice(2), g.subgrid({8, 8, 0}, {48, 48, 1}))) /
                         l2_norm(f);
    worst = std::max(worst, ratio);
  }
  return {"smoothing is an L2 contraction", worst <= 1.0, "max ratio " + fmt(worst)};
}

SelftestResult smoothing_affine() {
  const StructuredGrid g = square(64);
  const Field f = Field::from_function(g, 1, [](const Point& x, std::span<double> v) { v[0] = 1 + 2 * x[0] - x[1]; });
  const StructuredGrid inner = g.subgrid({8, 8, 0}, {48, 48, 1});
  const Field s = steklov_smooth(f, 0.125, unit_lattice(2), inner);
  double err = 0.0;
  for (std::size_t i = 0; i < s.points(); ++i) {
    const Point x = inner.node_coord(i);
    err = std::max(err, std::abs(s(i, 0) - (1 + 2 * x[0] - x[1])));
  }
  return {"smoothing leaves affine fields unchanged", err <= 1e-12, "error " + fmt(err)};
}

SelftestResult manufactured() {
  double e[2];
  int k = 0;
  for (int n : {32, 64}) {
    const StructuredGrid g = square(n);
    auto wave = [&](double s) {
      return Field::from_function(g, 1, [&](const Point& x, std::span<double> v) {
        v[0] = s * std::cos(pi * x[0]) * std::cos(pi * x[1]);
      });
    };
    const Solution sol = solve_problem(
        effective_problem(ProblemKind::neumann_eff, g, Eigen::Matrix2d::Identity(), 1.0, wave(2 * pi * pi + 1)),
        scalar_gradient(2));
    e[k++] = l2_norm(sol.u - wave(1.0));
  }
  const double order = std::log2(e[0] / e[1]);
  return {"manufactured Neumann solution converges at L2 order 2", order >= 1.9, "order " + fmt(order)};
}

SelftestResult extension() {
  const StructuredGrid g = square(24);
  auto q = [](const Point& x) { return x[0] * x[0] - x[0] * x[1] + 2 * x[1] * x[1] + 1; };
  const ExtendedField e =
      extend_h2(Field::from_function(g, 1, [&](const Point& x, std::span<double> v) { v[0] = q(x); }), 8);
  double err = 0.0;
  for (std::size_t i = 0; i < e.field.points(); ++i) {
    err = std::max(err, std::abs(e.field(i, 0) - q(e.field.grid().node_coord(i))));
  }
  return {"extension reproduces quadratics", err <= 1e-11, "error " + fmt(err)};
}

SelftestResult rates() {
  const double a = rate_fit({{0.125, 0.1}, {0.0625, 0.05}, {0.03125, 0.025}}).slope;
  const double b = rate_fit({{0.125, 0.1}, {0.0625, 0.1 / std::sqrt(2.0)}, {0.03125, 0.05}}).slope;
  const double err = std::max(std::abs(a - 1.0), std::abs(b - 0.5));
  return {"rate fit recovers slopes 1 and 1/2", err <= 1e-12, "error " + fmt(err)};
}

SelftestResult constant_study() {
  StudySpec s;
  s.op = scalar_gradient(2);
  s.lattice = unit_lattice(2);
  s.coefficient = constant_coefficient(2.0 * Eigen::Matrix2d::Identity());
  s.eps = {0.25, 0.125, 0.0625};
  s.nodes_per_eps = 8;
  const ConvergenceReport r = run_study(s);
  double worst = 0.0;
  for (const StudyRow& row : r.rows) {
    for (const auto& [k, v] : row.errors) {
      if (k != "err_flux") worst = std::max(worst, v);
    }
  }
  return {"constant coefficient study: solution errors vanish", !r.partial && worst <= 1e-9,
          "max error " + fmt(worst)};
}

SelftestResult config_round_trip() {
  const Config c = parse_config("[coefficient]\nkind = \"checkerboard\"\nhigh = 7.25\n[study]\nlambda = 0.1\n");
  return {"config round trip", parse_config(emit_config(c)) == c, "hash " + config_hash(c)};
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  const std::vector<std::pair<std::string, std::function<SelftestResult()>>> checks = {
      {"lattice", lattice_radii},
      {"cell 1D", harmonic_mean_1d},
      {"laminate", laminate},
      {"sandwich", sandwich},
      {"constant", constant_corrector},
      {"divfree", divfree},
      {"contraction", smoothing_contraction},
      {"affine", smoothing_affine},
      {"manufactured", manufactured},
      {"extension", extension},
      {"rate fit", rates},
      {"constant study", constant_study},
      {"config", config_round_trip},
  };
  std::vector<SelftestResult> out;
  for (const auto& [name, check] : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  }
  return out;
}

}  // namespace perihom
