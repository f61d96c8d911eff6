#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "perihom/cell_problem.hpp"
#include "perihom/config.hpp"
#include "perihom/error.hpp"
#include "perihom/harness.hpp"
#include "perihom/parallel.hpp"
#include "perihom/selftest.hpp"
#include "perihom/solvers.hpp"

using nlohmann::json;
using namespace perihom;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json metadata(const Config& config) {
  return {{"config_hash", config_hash(config)}, {"config", emit_config(config)}, {"threads", max_threads()}};
}

std::filesystem::path output_dir(const Config& config, const std::string& override_dir) {
  std::filesystem::path dir = override_dir.empty() ? config.output.dir : override_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::io_error, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

int run_cell(const Config& config, const std::string& out) {
  CellOptions opt = make_cell_options(config);
  const CellSolution s = solve_cell_problem(make_coefficient(config), make_operator(config), make_lattice(config), opt);
  const EllipticityConstants ell = check_rank_condition(s.op);
  const StructuralReport r = structural_diagnostics(s, ell.alpha0);
  json j = metadata(config);
  j["g_eff"] = matrix_json(s.g_eff);
  j["g_bar"] = matrix_json(s.g_bar);
  j["g_under"] = matrix_json(s.g_under);
  j["cell_nodes"] = s.grid.nodes(0);
  j["iterations"] = s.iterations;
  j["residuals"] = s.residuals;
  j["lambda_l2"] = s.lambda_l2;
  j["dlambda_l2"] = s.dlambda_l2;
  j["lambda_sup"] = s.lambda_sup;
  j["alpha0"] = ell.alpha0;
  j["alpha1"] = ell.alpha1;
  j["voigt_gap"] = r.voigt_gap;
  j["reuss_gap"] = r.reuss_gap;
  j["bounds_ok"] = r.dlambda_ok && r.lambda_ok && r.g_eff_ok && r.g_eff_inverse_ok;
  j["lambda_bounded"] = r.lambda_bounded();
  const auto dir = output_dir(config, out);
  write_json(dir / "cell.json", j);
  if (config.output.dump_fields) write_field_csv(s.lambda, (dir / "lambda.csv").string());
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_solve(const Config& config, const std::string& out) {
  const auto& p = config.problem;
  const SymbolOperator op = make_operator(config);
  const Lattice lattice = make_lattice(config);
  const PeriodicCoefficient g = make_coefficient(config);
  ProblemKind kind = ProblemKind::neumann_eps;
  for (ProblemKind k : {ProblemKind::neumann_eps, ProblemKind::neumann_eff, ProblemKind::periodic_eps,
                        ProblemKind::periodic_eff}) {
    if (p.kind == to_string(k)) kind = k;
  }
  const int d = op.dim;
  std::vector<double> lengths(d, p.side);
  std::vector<int> counts(d, p.elements);
  const StructuredGrid grid =
      is_periodic(kind) ? StructuredGrid::torus(lengths, counts) : StructuredGrid::rectangle(lengths, counts);
  StudySpec rhs_spec;
  rhs_spec.op = op;
  rhs_spec.side = p.side;
  rhs_spec.rhs_frequency = p.rhs_frequency;
  rhs_spec.domain = is_periodic(kind) ? StudyDomain::torus : StudyDomain::square;
  Field rhs = study_rhs(rhs_spec, grid);

  ProblemSpec spec;
  json j = metadata(config);
  if (kind == ProblemKind::neumann_eff || kind == ProblemKind::periodic_eff) {
    const CellSolution cell = solve_cell_problem(g, op, lattice, make_cell_options(config));
    spec = effective_problem(kind, grid, cell.g_eff, p.lambda, std::move(rhs));
    j["g_eff"] = matrix_json(cell.g_eff);
  } else {
    spec = oscillating_problem(kind, grid, g, p.eps, lattice, p.lambda, std::move(rhs));
  }
  spec.garding_c1 = config.symbol.garding_c1;
  spec.garding_c2 = config.symbol.garding_c2;
  spec.tol = p.tol;
  spec.preconditioner = p.preconditioner;
  const Solution sol = p.lambda == 0.0
                           ? solve_lambda0(spec, op, build_kernel(op, grid, make_kernel(config, config.study.kernel)))
                           : solve_problem(spec, op);
  j["kind"] = p.kind;
  j["iterations"] = sol.report.iterations;
  j["relative_residual"] = sol.report.relative_residual;
  j["l2_norm"] = l2_norm(sol.u);
  j["h1_norm"] = h1_norm(sol.u);
  j["energy"] = sol.energy;
  j["work"] = sol.work;
  if (p.lambda > 0.0) {
    const double c = coercivity_constant(spec);
    j["coercivity_constant"] = c;
    j["a_priori_bound"] = l2_norm(spec.rhs) / c;
  }
  const auto dir = output_dir(config, out);
  write_field_csv(sol.u, (dir / "solution.csv").string());
  write_json(dir / "solve.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_study_command(const Config& config, const std::string& out) {
  const ConvergenceReport r = run_study(make_study(config));
  const auto dir = output_dir(config, out);
  write_report(r, dir.string(), metadata(config).dump());
  json summary = {{"id", r.id}, {"pass", r.all_pass()}, {"partial", r.partial}, {"report", (dir / "report.json").string()}};
  for (const MetricCheck& c : r.checks) {
    summary["slopes"][c.metric] = c.fit.infinite ? json("inf") : json(c.fit.slope);
  }
  if (r.partial) summary["failure"] = r.failure;
  std::cout << summary.dump(2) << '\n';
  if (r.partial) throw Error(ErrorKind::solver_failure, r.failure);
  return r.all_pass() ? 0 : 3;
}

int run_selftest_command() {
  int failed = 0;
  for (const SelftestResult& r : run_selftest()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    failed += r.pass ? 0 : 1;
  }
  std::cout << (failed ? "selftest failed: " + std::to_string(failed) + " check(s)" : "selftest passed") << '\n';
  return failed ? 1 : 0;
}

void print_error(const std::string& kind, const std::string& message, const std::string& key = {}, int line = 0) {
  json j = {{"error", kind}, {"message", message}};
  if (!key.empty()) j["key"] = key;
  if (line > 0) j["line"] = line;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perihom: periodic homogenization toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (default: PERIHOM_THREADS or all cores)");
  std::string config_path, out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "TOML config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
  };
  CLI::App* cell = app.add_subcommand("cell", "solve the cell problem and report g0");
  CLI::App* solve = app.add_subcommand("solve", "solve one boundary value problem");
  CLI::App* study = app.add_subcommand("study", "run an eps sweep and fit convergence rates");
  CLI::App* self = app.add_subcommand("selftest", "run the built-in example suite");
  for (CLI::App* sub : {cell, solve, study}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  apply_thread_env();
  if (threads > 0) set_threads(threads);
  try {
    if (self->parsed()) return run_selftest_command();
    const Config config = load_config(config_path);
    if (cell->parsed()) return run_cell(config, out_dir);
    if (solve->parsed()) return run_solve(config, out_dir);
    return run_study_command(config, out_dir);
  } catch (const ConfigError& e) {
    print_error(to_string(e.kind()), e.what(), e.key(), e.line());
    return 2;
  } catch (const SolverFailure& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
}
