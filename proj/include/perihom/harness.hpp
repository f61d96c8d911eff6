#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perihom/cell_problem.hpp"
#include "perihom/solvers.hpp"

namespace perihom {

enum class StudyDomain { square, torus };

const char* to_string(StudyDomain domain);

/// Everything an eps-sweep needs. The fine grid uses h = eps / nodes_per_eps
/// and, unless cell.nodes_per_dim is set, the cell grid has nodes_per_eps
/// nodes per direction so that x / eps lands on cell nodes.
struct StudySpec {
  std::string id = "study";
  SymbolOperator op;
  Lattice lattice;
  PeriodicCoefficient coefficient;
  CellOptions cell;
  StudyDomain domain = StudyDomain::square;
  double lambda = 1.0;
  std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
  int nodes_per_eps = 16;
  double side = 1.0;       // square side or torus period
  int rhs_frequency = 0;   // F_c = prod_j cos(k pi x_j / side); 0 picks 1 (square) or 2 (torus)
  double interior_delta = 0.25;    // 0 disables the interior metric
  double interior_exponent = 0.0;  // > 0: delta(eps) = eps^a instead
  bool plain_corrector = true;
  double garding_c1 = 1.0;
  double garding_c2 = 0.0;
  std::vector<AffineField> kernel;  // lambda = 0 only; empty means affine_kernel(op)
  double tol = 1e-10;
  std::string preconditioner = "spectral";
};

/// Metrics for one eps. Keys: err_l2, err_h1, err_h1_corr, err_flux and,
/// when enabled, err_h1_corr_plain, err_flux_plain, err_h1_interior,
/// err_h1_interior_plain.
struct StudyRow {
  double eps = 0.0;
  double h = 0.0;
  int elements = 0;
  double delta = 0.0;
  std::map<std::string, double> errors;
  double norm_u0_l2 = 0.0;
  int iterations_eps = 0;
  int iterations_eff = 0;
  double extension_h2_ratio = 0.0;
  double seconds = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the log2 misfit
  bool infinite = false;  // some error was exactly zero
  int points = 0;
};

/// Least squares for log2(err) = slope log2(eps) + intercept. Needs >= 3
/// points and distinct eps, else Error(fit_error); any zero error short-
/// circuits to an infinite slope.
RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs);

struct MetricCheck {
  std::string metric;
  RateFit fit;
  double target = 0.0;
  double band = 0.2;
  double max_error = 0.0;
  bool exact = false;  // every error <= 1e-9
  bool pass = false;
};

struct ConvergenceReport {
  std::string id;
  StudyDomain domain = StudyDomain::square;
  double lambda = 0.0;
  std::string symbol;
  std::string coefficient;
  Eigen::MatrixXd g_eff;
  int cell_nodes = 0;
  std::vector<StudyRow> rows;
  std::vector<MetricCheck> checks;
  bool interior_beats_global = false;
  bool partial = false;
  std::string failure;

  bool all_pass() const;
  const MetricCheck* check(const std::string& metric) const;
  std::vector<double> series(const std::string& metric) const;
};

/// Target slopes: 1 for every metric on the torus; on the square 1 for
/// err_l2 and err_h1_interior, 1/2 for the corrected H1 and flux errors.
std::map<std::string, double> target_rates(StudyDomain domain);

/// Runs the sweep in the order given. A solver failure stops it and returns
/// the rows computed so far with partial = true.
ConvergenceReport run_study(const StudySpec& spec);

/// H1 norm on the box at distance delta from the boundary of a rectangle.
/// delta = 0 gives the whole-domain norm; Error(empty_subdomain) when the
/// box is empty.
double interior_metrics(const Field& error, double delta);

/// The default load on the study grid.
Field study_rhs(const StudySpec& spec, const StructuredGrid& grid);

/// report.json, report.csv and one <metric>.dat per metric under `dir`.
/// `metadata` is a JSON object text merged into report.json.
void write_report(const ConvergenceReport& report, const std::string& dir, const std::string& metadata = "{}");

std::string report_json(const ConvergenceReport& report, const std::string& metadata = "{}");

}  // namespace perihom
