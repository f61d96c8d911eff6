#include "perihom/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "perihom/approximation.hpp"
#include "perihom/error.hpp"

namespace perihom {

namespace {

constexpr double kExact = 1e-9;

Box interior_box(const StructuredGrid& grid, double delta) {
  Box b = grid.bounds();
  for (int j = 0; j < grid.dim(); ++j) {
    b.lower[j] += delta;
    b.upper[j] -= delta;
    if (!(b.lower[j] < b.upper[j])) throw Error(ErrorKind::empty_subdomain, "interior subdomain is empty");
  }
  return b;
}

StructuredGrid study_grid(const StudySpec& spec, double eps) {
  const int d = spec.op.dim;
  const double n = spec.side * spec.nodes_per_eps / eps;
  const int elements = static_cast<int>(std::lround(n));
  if (std::abs(n - elements) > 1e-9 * n) {
    throw Error(ErrorKind::configuration, "side * nodes_per_eps / eps must be an integer");
  }
  std::vector<double> lengths(d, spec.side);
  std::vector<int> counts(d, elements);
  return spec.domain == StudyDomain::torus ? StructuredGrid::torus(lengths, counts)
                                           : StructuredGrid::rectangle(lengths, counts);
}

void validate(const StudySpec& spec) {
  if (spec.op.dim < 1 || spec.lattice.dim != spec.op.dim) {
    throw Error(ErrorKind::component_mismatch, "symbol and lattice dimensions differ");
  }
  if (spec.eps.size() < 3) throw Error(ErrorKind::configuration, "a study needs at least three eps values");
  for (std::size_t i = 0; i < spec.eps.size(); ++i) {
    if (!(spec.eps[i] > 0.0)) throw Error(ErrorKind::configuration, "eps values must be positive");
    if (i > 0 && !(spec.eps[i] < spec.eps[i - 1])) {
      throw Error(ErrorKind::configuration, "eps values must be strictly decreasing");
    }
  }
  if (spec.nodes_per_eps < 8) throw Error(ErrorKind::configuration, "nodes_per_eps must be at least 8");
  if (spec.lambda == 0.0 && spec.domain == StudyDomain::torus) {
    throw Error(ErrorKind::configuration, "lambda = 0 is only supported on the square");
  }
  if (spec.interior_delta < 0.0) throw Error(ErrorKind::configuration, "interior delta must be non-negative");
}

void add_check(ConvergenceReport& r, const std::string& metric, double target) {
  std::vector<std::pair<double, double>> pairs;
  MetricCheck c;
  c.metric = metric;
  c.target = target;
  for (const StudyRow& row : r.rows) {
    const auto it = row.errors.find(metric);
    if (it == row.errors.end()) return;
    pairs.emplace_back(row.eps, it->second);
    c.max_error = std::max(c.max_error, it->second);
  }
  if (pairs.size() < 3) return;
  c.exact = c.max_error <= kExact;
  c.fit = rate_fit(pairs);
  c.pass = c.exact || (!c.fit.infinite && std::abs(c.fit.slope - target) <= c.band);
  r.checks.push_back(c);
}

}  // namespace

const char* to_string(StudyDomain domain) { return domain == StudyDomain::torus ? "torus" : "square"; }

RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw Error(ErrorKind::fit_error, "rate fit needs at least three points");
  RateFit fit;
  fit.points = static_cast<int>(pairs.size());
  for (const auto& [eps, err] : pairs) {
    if (!(eps > 0.0) || !(err >= 0.0)) throw Error(ErrorKind::fit_error, "rate fit needs eps > 0 and err >= 0");
    if (err == 0.0) fit.infinite = true;
  }
  if (fit.infinite) {
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [eps, err] : pairs) {
    mx += std::log2(eps) / n;
    my += std::log2(err) / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [eps, err] : pairs) {
    const double dx = std::log2(eps) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(err) - my);
  }
  if (sxx <= 1e-24) throw Error(ErrorKind::fit_error, "rate fit needs distinct eps values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [eps, err] : pairs) {
    const double r = std::log2(err) - (fit.slope * std::log2(eps) + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

double interior_metrics(const Field& error, double delta) {
  if (error.grid().periodic()) throw Error(ErrorKind::configuration, "interior metrics need a rectangle");
  if (delta < 0.0) throw Error(ErrorKind::configuration, "delta must be non-negative");
  if (delta == 0.0) return h1_norm(error);
  return h1_norm(error, interior_box(error.grid(), delta));
}

Field study_rhs(const StudySpec& spec, const StructuredGrid& grid) {
  const int k = spec.rhs_frequency > 0 ? spec.rhs_frequency : (spec.domain == StudyDomain::torus ? 2 : 1);
  const int d = grid.dim(), n = spec.op.cols;
  const double w = k * std::numbers::pi / spec.side;
  return Field::from_function(grid, n, [&](const Point& x, std::span<double> v) {
    double p = 1.0;
    for (int j = 0; j < d; ++j) p *= std::cos(w * x[j]);
    for (int c = 0; c < n; ++c) v[c] = p;
  });
}

std::map<std::string, double> target_rates(StudyDomain domain) {
  if (domain == StudyDomain::torus) {
    return {{"err_l2", 1.0}, {"err_h1_corr", 1.0}, {"err_flux", 1.0}, {"err_h1_corr_plain", 1.0},
            {"err_flux_plain", 1.0}};
  }
  return {{"err_l2", 1.0},           {"err_h1_corr", 0.5},     {"err_flux", 0.5},
          {"err_h1_corr_plain", 0.5}, {"err_flux_plain", 0.5}, {"err_h1_interior", 1.0}};
}

bool ConvergenceReport::all_pass() const {
  if (partial) return false;
  for (const MetricCheck& c : checks) {
    if (!c.pass) return false;
  }
  const MetricCheck* in = check("err_h1_interior");
  return in == nullptr || interior_beats_global;
}

const MetricCheck* ConvergenceReport::check(const std::string& metric) const {
  for (const MetricCheck& c : checks) {
    if (c.metric == metric) return &c;
  }
  return nullptr;
}

std::vector<double> ConvergenceReport::series(const std::string& metric) const {
  std::vector<double> out;
  for (const StudyRow& row : rows) {
    const auto it = row.errors.find(metric);
    if (it != row.errors.end()) out.push_back(it->second);
  }
  return out;
}

ConvergenceReport run_study(const StudySpec& spec) {
  validate(spec);
  ConvergenceReport report;
  report.id = spec.id;
  report.domain = spec.domain;
  report.lambda = spec.lambda;
  report.symbol = spec.op.name;
  report.coefficient = spec.coefficient.name();

  CellOptions cell_opt = spec.cell;
  if (cell_opt.nodes_per_dim == 0) cell_opt.nodes_per_dim = spec.nodes_per_eps;
  const CellSolution cell = solve_cell_problem(spec.coefficient, spec.op, spec.lattice, cell_opt);
  report.g_eff = cell.g_eff;
  report.cell_nodes = cell_opt.nodes_per_dim;

  const bool torus = spec.domain == StudyDomain::torus;
  const ProblemKind kind_eps = torus ? ProblemKind::periodic_eps : ProblemKind::neumann_eps;
  const ProblemKind kind_eff = torus ? ProblemKind::periodic_eff : ProblemKind::neumann_eff;

  for (double eps : spec.eps) {
    const auto start = std::chrono::steady_clock::now();
    StudyRow row;
    row.eps = eps;
    try {
      const StructuredGrid grid = study_grid(spec, eps);
      row.elements = grid.elements(0);
      row.h = grid.spacing(0);
      const Field rhs = study_rhs(spec, grid);
      ProblemSpec pe = oscillating_problem(kind_eps, grid, spec.coefficient, eps, spec.lattice, spec.lambda, rhs);
      ProblemSpec p0 = effective_problem(kind_eff, grid, cell.g_eff, spec.lambda, rhs);
      for (ProblemSpec* p : {&pe, &p0}) {
        p->garding_c1 = spec.garding_c1;
        p->garding_c2 = spec.garding_c2;
        p->tol = spec.tol;
        p->preconditioner = spec.preconditioner;
        p->reference = cell.g_eff;
      }
      Solution se, s0;
      if (spec.lambda == 0.0) {
        const KernelBasis kernel = build_kernel(spec.op, grid, spec.kernel);
        se = solve_lambda0(pe, spec.op, kernel);
        s0 = solve_lambda0(p0, spec.op, kernel);
      } else {
        se = solve_problem(pe, spec.op);
        s0 = solve_problem(p0, spec.op);
      }
      row.iterations_eps = se.report.iterations;
      row.iterations_eff = s0.report.iterations;
      const Field& ue = se.u;
      const Field& u0 = s0.u;
      row.norm_u0_l2 = l2_norm(u0);
      const Field diff = ue - u0;
      row.errors["err_l2"] = l2_norm(diff);
      row.errors["err_h1"] = h1_norm(diff);

      const Field w = smoothed_symbol_gradient(u0, cell, eps);
      const Field v = add_corrector(u0, cell, eps, w);
      const Field corr_err = ue - v;
      row.errors["err_h1_corr"] = h1_norm(corr_err);
      const Field pe_flux = flux(ue, spec.op, pe.g);
      const ElementCoefficients gt = periodic_flux_matrix(cell, grid, eps);
      row.errors["err_flux"] = l2_norm(pe_flux - apply_matrix(gt, element_average(w)));
      if (!torus) {
        const ExtendedField ext = extend_h2(u0, extension_margin(grid, eps, spec.lattice));
        row.extension_h2_ratio = ext.h2_ratio;
      }
      Field plain_err;
      if (spec.plain_corrector) {
        plain_err = ue - corrector_plain(u0, cell, eps);
        row.errors["err_h1_corr_plain"] = h1_norm(plain_err);
        row.errors["err_flux_plain"] = l2_norm(pe_flux - flux_approx_plain(u0, cell, eps));
      }
      if (!torus && (spec.interior_delta > 0.0 || spec.interior_exponent > 0.0)) {
        row.delta = spec.interior_exponent > 0.0 ? std::pow(eps, spec.interior_exponent) : spec.interior_delta;
        row.errors["err_h1_interior"] = interior_metrics(corr_err, row.delta);
        if (spec.plain_corrector) row.errors["err_h1_interior_plain"] = interior_metrics(plain_err, row.delta);
      }
    } catch (const Error& e) {
      report.partial = true;
      report.failure = e.what();
      break;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(std::move(row));
  }

  if (!report.partial) {
    for (const auto& [metric, target] : target_rates(spec.domain)) add_check(report, metric, target);
    const MetricCheck* in = report.check("err_h1_interior");
    const MetricCheck* gl = report.check("err_h1_corr");
    if (in != nullptr && gl != nullptr) {
      report.interior_beats_global = (in->exact && gl->exact) || in->fit.slope > gl->fit.slope;
    }
  }
  return report;
}

std::string report_json(const ConvergenceReport& r, const std::string& metadata) {
  using nlohmann::json;
  auto number = [](double v) -> json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
  };
  json j = json::parse(metadata);
  j["id"] = r.id;
  j["domain"] = to_string(r.domain);
  j["lambda"] = r.lambda;
  j["symbol"] = r.symbol;
  j["coefficient"] = r.coefficient;
  j["cell_nodes"] = r.cell_nodes;
  json g = json::array();
  for (int i = 0; i < r.g_eff.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < r.g_eff.cols(); ++k) row.push_back(r.g_eff(i, k));
    g.push_back(row);
  }
  j["g_eff"] = g;
  j["rows"] = json::array();
  for (const StudyRow& row : r.rows) {
    json jr = {{"eps", row.eps},
               {"h", row.h},
               {"elements", row.elements},
               {"norm_u0_l2", row.norm_u0_l2},
               {"iterations_eps", row.iterations_eps},
               {"iterations_eff", row.iterations_eff},
               {"extension_h2_ratio", row.extension_h2_ratio}};
    if (row.delta > 0.0) jr["delta"] = row.delta;
    for (const auto& [k, v] : row.errors) jr[k] = v;
    j["rows"].push_back(jr);
  }
  j["fits"] = json::array();
  for (const MetricCheck& c : r.checks) {
    j["fits"].push_back({{"metric", c.metric},
                         {"slope", number(c.fit.slope)},
                         {"intercept", number(c.fit.intercept)},
                         {"residual", c.fit.residual},
                         {"target", c.target},
                         {"band", c.band},
                         {"max_error", c.max_error},
                         {"exact", c.exact},
                         {"pass", c.pass}});
  }
  if (r.check("err_h1_interior") != nullptr) j["interior_beats_global"] = r.interior_beats_global;
  j["partial"] = r.partial;
  if (r.partial) j["failure"] = r.failure;
  j["pass"] = r.all_pass();
  return j.dump(2);
}

void write_report(const ConvergenceReport& r, const std::string& dir, const std::string& metadata) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir + ": " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw Error(ErrorKind::io_error, "cannot write " + (fs::path(dir) / name).string());
    f.precision(17);
    return f;
  };
  open("report.json") << report_json(r, metadata) << '\n';

  std::vector<std::string> metrics;
  if (!r.rows.empty()) {
    for (const auto& [k, v] : r.rows.front().errors) metrics.push_back(k);
  }
  std::ofstream csv = open("report.csv");
  csv << "eps,h";
  for (const auto& m : metrics) csv << ',' << m;
  csv << '\n';
  for (const StudyRow& row : r.rows) {
    csv << row.eps << ',' << row.h;
    for (const auto& m : metrics) csv << ',' << row.errors.at(m);
    csv << '\n';
  }
  for (const auto& m : metrics) {
    std::ofstream dat = open(m + ".dat");
    dat << "# eps " << m << '\n';
    for (const StudyRow& row : r.rows) dat << row.eps << ' ' << row.errors.at(m) << '\n';
  }
}

}  // namespace perihom
