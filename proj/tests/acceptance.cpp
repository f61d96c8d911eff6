// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all
// criteria pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "perihom/approximation.hpp"
#include "perihom/cell_problem.hpp"
#include "perihom/config.hpp"
#include "perihom/harness.hpp"
#include "perihom/parallel.hpp"
#include "perihom/smoothing.hpp"
#include "perihom/solvers.hpp"

using namespace perihom;
using std::numbers::pi;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "FAILED ") << what;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int precision = 3) {
  std::ostringstream o;
  o.precision(precision);
  o << v;
  return o.str();
}

double min_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

StructuredGrid square(int n) {
  const double len[2] = {1.0, 1.0};
  const int el[2] = {n, n};
  return StructuredGrid::rectangle(len, el);
}

StructuredGrid torus(int n) {
  const double len[2] = {1.0, 1.0};
  const int el[2] = {n, n};
  return StructuredGrid::torus(len, el);
}

Field random_field(const StructuredGrid& g, int k, std::uint64_t seed) {
  Field f(g, k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : f.values()) v = u(rng);
  return f;
}

CellSolution cell(const PeriodicCoefficient& g, const SymbolOperator& op, const Lattice& lat, int nodes) {
  CellOptions o;
  o.nodes_per_dim = nodes;
  return solve_cell_problem(g, op, lat, o);
}

// 1. Effective-matrix oracles.
void criterion1(Verdict& v) {
  {
    const auto t0 = Clock::now();
    const CellSolution s = cell(trig_coefficient(1, 2.0, 1.0), scalar_gradient(1), unit_lattice(1), 512);
    const double err = std::abs(s.g_eff(0, 0) - std::sqrt(3.0));
    const double t = seconds_since(t0);
    v.require(err <= 1e-6 && t < 1.0, "1D |g0 - sqrt3| = " + num(err) + " in " + num(t) + " s");
  }
  {
    const auto t0 = Clock::now();
    const CellSolution s = cell(laminate_coefficient(2, 1.0, 4.0), scalar_gradient(2), unit_lattice(2), 256);
    Eigen::Matrix2d expected;
    expected << 1.6, 0.0, 0.0, 2.5;
    const double err = (s.g_eff - expected).norm();
    const double t = seconds_since(t0);
    v.require(err <= 1e-4 && t < 30.0, "laminate |g0 - diag(1.6, 2.5)| = " + num(err) + " in " + num(t) + " s");
  }
  {
    std::vector<std::pair<std::string, CellSolution>> cases;
    const auto grad2 = scalar_gradient(2);
    const auto lat2 = unit_lattice(2);
    cases.emplace_back("constant", cell(constant_coefficient(Eigen::Matrix2d{{2.0, 0.5}, {0.5, 1.0}}), grad2, lat2, 32));
    cases.emplace_back("laminate", cell(laminate_coefficient(2, 1.0, 4.0), grad2, lat2, 64));
    cases.emplace_back("checkerboard", cell(checkerboard_coefficient(2, 2, 1.0, 10.0), grad2, lat2, 64));
    cases.emplace_back("trig", cell(trig_coefficient(2, 2.0, 1.0, 1), grad2, lat2, 64));
    cases.emplace_back("divfree", cell(divfree_diag_coefficient(2.0, 1.0, 3.0, 1.0), grad2, lat2, 64));
    {
      std::vector<double> samples(16);
      std::mt19937_64 rng(7);
      std::uniform_real_distribution<double> u(0.5, 8.0);
      for (double& x : samples) x = u(rng);
      cases.emplace_back("samples", cell(sampled_coefficient(2, 2, 4, samples), grad2, lat2, 64));
    }
    Eigen::Matrix2d skew;
    skew << 1.0, 0.3, 0.0, 1.1;
    cases.emplace_back("laminate on a skewed lattice",
                       cell(laminate_coefficient(2, 1.0, 4.0), grad2, build_lattice(skew), 64));
    cases.emplace_back("elasticity checkerboard",
                       cell(checkerboard_coefficient(3, 2, 1.0, 4.0), elasticity_2d(), lat2, 64));
    cases.emplace_back("3D checkerboard",
                       cell(checkerboard_coefficient(3, 3, 1.0, 10.0), scalar_gradient(3), unit_lattice(3), 16));
    for (const auto& entry : std::filesystem::directory_iterator(PERIHOM_CONFIG_DIR)) {
      if (entry.path().extension() != ".toml") continue;
      const Config c = load_config(entry.path().string());
      cases.emplace_back(entry.path().filename().string(),
                         solve_cell_problem(make_coefficient(c), make_operator(c), make_lattice(c), make_cell_options(c)));
    }
    double worst = 1e300;
    std::string worst_name;
    for (const auto& [name, s] : cases) {
      const double gap = std::min(min_eig(s.g_bar - s.g_eff), min_eig(s.g_eff - s.g_under));
      if (gap < worst) {
        worst = gap;
        worst_name = name;
      }
    }
    v.require(worst >= -1e-8, "sandwich over " + std::to_string(cases.size()) + " coefficients, min gap " +
                                  num(worst) + " (" + worst_name + ")");
  }
  {
    const CellSolution s = cell(divfree_diag_coefficient(2.0, 1.0, 3.0, 1.0), scalar_gradient(2), unit_lattice(2), 64);
    const double h1 = std::hypot(s.lambda_l2, s.dlambda_l2);
    const double gap = (s.g_eff - s.g_bar).norm();
    v.require(h1 <= 1e-6 && gap <= 1e-6, "divfree |Lambda|_H1 = " + num(h1) + ", |g0 - g_bar| = " + num(gap));
  }
}

// 2. Smoothing operator.
void criterion2(Verdict& v) {
  const auto t0 = Clock::now();
  const Lattice lat = unit_lattice(2);
  {
    const StructuredGrid g = torus(32);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Field u = random_field(g, 1, 1000 + t);
      worst = std::max(worst, l2_norm(steklov_smooth(u, 1.0 / (2 + t % 7), lat)) / l2_norm(u));
    }
    v.require(worst <= 1.0 + 1e-12, "contraction max |Su|/|u| = " + num(worst, 6) + " over 100 fields");
  }
  {
    const StructuredGrid g = square(64);
    const StructuredGrid inner = g.subgrid({8, 8, 0}, {48, 48, 1});
    const Field u = Field::from_function(g, 2, [](const Point& x, std::span<double> w) {
      w[0] = 1.0 + 2.0 * x[0] - 3.0 * x[1];
      w[1] = -0.5 + x[1];
    });
    double err = 0.0;
    for (const Field& s : {steklov_smooth(u, 0.125, lat, inner), steklov_smooth_direct(u, 0.125, lat, inner)}) {
      for (std::size_t i = 0; i < s.points(); ++i) {
        const Point x = inner.node_coord(i);
        err = std::max({err, std::abs(s(i, 0) - (1.0 + 2.0 * x[0] - 3.0 * x[1])), std::abs(s(i, 1) - (-0.5 + x[1]))});
      }
    }
    v.require(err <= 1e-12, "affine invariance error " + num(err));
  }
  {
    const StructuredGrid g = torus(128);
    const double h = 1.0 / 128;
    double worst = 0.0;
    for (int k = 1; k <= 4; ++k) {
      const Field u = Field::from_function(g, 1, [k](const Point& x, std::span<double> w) {
        w[0] = std::cos(2 * pi * k * x[0]) + std::sin(2 * pi * x[1]);
      });
      for (double eps : {0.05, 0.1, 0.2}) {
        const double lhs = l2_norm(steklov_smooth(u, eps, lat) - u);
        worst = std::max(worst, lhs / (eps * lat.r1 * h1_seminorm(u) + 2 * h * h));
      }
    }
    v.require(worst <= 1.0, "|Su - u| / (eps r1 |Du| + 2h^2) max " + num(worst));
  }
  {
    // |[f^eps] S_eps| <= |Omega|^{-1/2} |f|_{L2(Omega)}, power iteration on (fS)^*(fS).
    const double eps = 0.125;
    const StructuredGrid g = torus(128);
    auto f = [&](const Point& x) {
      const bool a = x[0] / eps - std::floor(x[0] / eps) >= 0.5;
      const bool b = x[1] / eps - std::floor(x[1] / eps) >= 0.5;
      return a != b ? 4.0 : 1.0;
    };
    const double bound = std::sqrt((1.0 + 16.0) / 2.0);
    Field x = random_field(g, 1, 77);
    double estimate = 0.0;
    for (int it = 0; it < 60; ++it) {
      Field w = steklov_smooth(x, eps, lat);
      for (std::size_t p = 0; p < g.num_nodes(); ++p) w(p, 0) *= std::pow(f(g.node_coord(p)), 2);
      w = steklov_smooth(w, eps, lat);
      estimate = std::sqrt(dot(w.values(), x.values()) / dot(x.values(), x.values()));
      const double nw = std::sqrt(dot(w.values(), w.values()));
      for (double& y : w.values()) y /= nw;
      x = w;
    }
    v.require(estimate <= 1.05 * bound, "checkerboard multiplier norm " + num(estimate) + " vs bound " + num(bound));
  }
  const double t = seconds_since(t0);
  v.require(t < 10.0, "runtime " + num(t) + " s");
}

// 3. Solver correctness.
void criterion3(Verdict& v) {
  const auto t0 = Clock::now();
  const auto op = scalar_gradient(2);
  {
    std::vector<double> l2, h1;
    for (int n : {32, 64, 128}) {
      const StructuredGrid g = square(n);
      auto u = [&](double s) {
        return Field::from_function(g, 1, [&](const Point& x, std::span<double> w) {
          w[0] = s * std::cos(pi * x[0]) * std::cos(pi * x[1]);
        });
      };
      const Solution sol = solve_problem(
          effective_problem(ProblemKind::neumann_eff, g, Eigen::Matrix2d::Identity(), 1.0, u(2 * pi * pi + 1)), op);
      const Field exact = u(1.0);
      l2.push_back(l2_norm(sol.u - exact));
      h1.push_back(h1_norm(sol.u - exact));
    }
    const double o2 = std::min(std::log2(l2[0] / l2[1]), std::log2(l2[1] / l2[2]));
    const double o1 = std::min(std::log2(h1[0] / h1[1]), std::log2(h1[1] / h1[2]));
    v.require(o2 >= 1.9, "L2 order " + num(o2));
    v.require(o1 >= 0.9, "H1 order " + num(o1));
  }
  {
    double worst = 0.0;
    const StructuredGrid g = square(128);
    for (double lambda : {1.0, 0.1}) {
      const ProblemSpec spec = oscillating_problem(ProblemKind::neumann_eps, g, checkerboard_coefficient(2, 2, 1.0, 10.0),
                                                   0.0625, unit_lattice(2), lambda, random_field(g, 1, 31));
      const Solution s = solve_problem(spec, op);
      worst = std::max(worst, std::abs(s.energy - s.work) / std::abs(s.work));
    }
    const ProblemSpec el = oscillating_problem(ProblemKind::neumann_eps, g, checkerboard_coefficient(3, 2, 1.0, 4.0),
                                               0.125, unit_lattice(2), 1.0, random_field(g, 2, 32));
    const Solution se = solve_problem(el, elasticity_2d());
    worst = std::max(worst, std::abs(se.energy - se.work) / std::abs(se.work));
    v.require(worst <= 1e-8, "energy identity relative error " + num(worst));
  }
  {
    double worst = 0.0;
    const StructuredGrid g = square(64);
    for (const SymbolOperator& o : {scalar_gradient(2), elasticity_2d()}) {
      const KernelBasis kernel = build_kernel(o, g);
      const ProblemSpec spec =
          oscillating_problem(ProblemKind::neumann_eps, g, checkerboard_coefficient(o.rows, 2, 1.0, 10.0), 0.125,
                              unit_lattice(2), 0.0, random_field(g, o.cols, 41));
      const Solution s = solve_lambda0(spec, o, kernel);
      for (const Field& z : kernel.basis) worst = std::max(worst, std::abs(l2_inner(s.u, z)));
    }
    v.require(worst <= 1e-10, "lambda = 0 kernel inner products max " + num(worst));
  }
  const double t = seconds_since(t0);
  v.require(t < 60.0, "runtime " + num(t) + " s");
}

StudySpec checkerboard_study(StudyDomain domain, double lambda) {
  StudySpec s;
  s.op = scalar_gradient(2);
  s.lattice = unit_lattice(2);
  s.coefficient = checkerboard_coefficient(2, 2, 1.0, 10.0);
  s.domain = domain;
  s.lambda = lambda;
  s.eps = {0.125, 0.0625, 0.03125, 0.015625};
  s.nodes_per_eps = 16;
  return s;
}

void require_slope(Verdict& v, const ConvergenceReport& r, const std::string& metric, double target) {
  const MetricCheck* c = r.check(metric);
  if (c == nullptr) {
    v.require(false, metric + " missing");
    return;
  }
  v.require(!c->fit.infinite && std::abs(c->fit.slope - target) <= 0.2,
            metric + " slope " + num(c->fit.slope) + " (target " + num(target) + " +- 0.2)");
}

void rate_criterion(Verdict& v, StudyDomain domain, double lambda, const std::vector<std::pair<std::string, double>>& slopes,
                    double limit, bool interior) {
  const auto t0 = Clock::now();
  const ConvergenceReport r = run_study(checkerboard_study(domain, lambda));
  if (r.partial) {
    v.require(false, "study aborted: " + r.failure);
    return;
  }
  for (const auto& [metric, target] : slopes) require_slope(v, r, metric, target);
  if (interior) {
    const MetricCheck* in = r.check("err_h1_interior");
    const MetricCheck* gl = r.check("err_h1_corr");
    v.require(in && gl && in->fit.slope > gl->fit.slope, "interior slope exceeds global");
  }
  const double t = seconds_since(t0);
  v.require(t < limit, "runtime " + num(t) + " s");
}

void criterion4(Verdict& v) {
  rate_criterion(v, StudyDomain::torus, 1.0, {{"err_l2", 1.0}, {"err_h1_corr", 1.0}, {"err_flux", 1.0}}, 600.0, false);
}

void criterion5(Verdict& v) {
  rate_criterion(v, StudyDomain::square, 1.0,
                 {{"err_l2", 1.0},
                  {"err_h1_corr", 0.5},
                  {"err_flux", 0.5},
                  {"err_h1_corr_plain", 0.5},
                  {"err_h1_interior", 1.0}},
                 900.0, true);
}

void criterion6(Verdict& v) {
  rate_criterion(v, StudyDomain::square, 0.0, {{"err_l2", 1.0}, {"err_h1_corr", 0.5}}, 900.0, false);
}

// 7. Constant coefficient: every metric below 1e-9 for every eps.
void criterion7(Verdict& v) {
  for (StudyDomain domain : {StudyDomain::square, StudyDomain::torus}) {
    StudySpec s = checkerboard_study(domain, 1.0);
    s.coefficient = constant_coefficient(Eigen::Matrix2d{{2.0, 0.5}, {0.5, 1.0}});
    const ConvergenceReport r = run_study(s);
    if (r.partial) {
      v.require(false, std::string(to_string(domain)) + " study aborted: " + r.failure);
      continue;
    }
    std::map<std::string, double> worst;
    for (const StudyRow& row : r.rows) {
      for (const auto& [k, e] : row.errors) worst[k] = std::max(worst[k], e);
    }
    for (const auto& [k, e] : worst) v.require(e <= 1e-9, std::string(to_string(domain)) + " " + k + " " + num(e));
  }
}

}  // namespace

int main() {
  apply_thread_env();
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"1 effective-matrix oracles", criterion1},
      {"2 smoothing operator", criterion2},
      {"3 solver correctness", criterion3},
      {"4 torus rates", criterion4},
      {"5 square Neumann rates", criterion5},
      {"6 lambda = 0 rates", criterion6},
      {"7 constant coefficient", criterion7},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::printf("CRITERION %s: %s [%.1f s] %s\n", name.c_str(), v.pass ? "PASS" : "FAIL", seconds_since(t0),
                v.detail.str().c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
