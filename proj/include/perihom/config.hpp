#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perihom/cell_problem.hpp"
#include "perihom/harness.hpp"
#include "perihom/solvers.hpp"

namespace perihom {

using Rows = std::vector<std::vector<double>>;  // row-major matrix

struct SymbolConfig {
  std::string kind = "scalar_gradient";  // scalar_gradient | elasticity_2d | custom
  int dim = 2;
  std::vector<Rows> matrices;  // custom: b_1 .. b_d, each m x n
  double garding_c1 = 1.0;
  double garding_c2 = 0.0;
  bool operator==(const SymbolConfig&) const = default;
};

struct LatticeConfig {
  Rows basis;  // row j is the basis vector a_j; filled with the identity
  bool operator==(const LatticeConfig&) const = default;
};

struct CoefficientConfig {
  std::string kind = "constant";  // constant | laminate | checkerboard | trig | divfree | samples
  Rows value;                     // constant: m x m, or [[s]] for s * I
  double low = 1.0;
  double high = 10.0;
  double fraction = 0.5;
  int axis = 1;
  double mean = 2.0;
  double amplitude = 1.0;
  double a0 = 2.0, a1 = 1.0, b0 = 3.0, b1 = 1.0;
  int resolution = 0;
  std::vector<double> samples;
  bool operator==(const CoefficientConfig&) const = default;
};

struct CellConfig {
  int nodes = 0;  // 0: dimension default
  double tol = 1e-10;
  std::string preconditioner = "spectral";
  bool operator==(const CellConfig&) const = default;
};

struct ProblemConfig {
  std::string kind = "neumann_eps";
  double lambda = 1.0;
  double eps = 0.125;
  int elements = 128;
  double side = 1.0;
  int rhs_frequency = 0;
  double tol = 1e-10;
  std::string preconditioner = "spectral";
  bool operator==(const ProblemConfig&) const = default;
};

struct StudyConfig {
  std::string id = "study";
  std::string domain = "square";
  double lambda = 1.0;
  std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
  int nodes_per_eps = 16;
  double side = 1.0;
  int rhs_frequency = 0;
  double interior_delta = 0.25;
  double interior_exponent = 0.0;
  bool plain_corrector = true;
  Rows kernel;  // each row: offset (n) then gradient (n x d, row-major)
  double tol = 1e-10;
  std::string preconditioner = "spectral";
  std::int64_t seed = 0;
  bool operator==(const StudyConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  bool dump_fields = false;
  bool operator==(const OutputConfig&) const = default;
};

struct Config {
  SymbolConfig symbol;
  LatticeConfig lattice;
  CoefficientConfig coefficient;
  CellConfig cell;
  ProblemConfig problem;
  StudyConfig study;
  OutputConfig output;
  bool operator==(const Config&) const = default;
};

/// Parses the TOML subset used by the configs: [section] headers,
/// key = value with numbers, booleans, "strings" and (nested, possibly
/// multi-line) arrays, and # comments. Fills defaults and validates. Throws
/// ConfigError carrying the offending key and line.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// Canonical text with every field spelled out; parse_config(emit_config(c))
/// == c.
std::string emit_config(const Config& config);

/// FNV-1a 64-bit hash of emit_config, as 16 hex digits.
std::string config_hash(const Config& config);

SymbolOperator make_operator(const Config& config);
Lattice make_lattice(const Config& config);
PeriodicCoefficient make_coefficient(const Config& config);
CellOptions make_cell_options(const Config& config);
StudySpec make_study(const Config& config);
std::vector<AffineField> make_kernel(const Config& config, const Rows& rows);

}  // namespace perihom
