#pragma once

#include <string>

#include "perihom/cell_problem.hpp"
#include "perihom/field.hpp"

namespace perihom {

/// A nodal field on a rectangle enlarged by `margin` elements on every side.
struct ExtendedField {
  Field field;
  StructuredGrid domain;  // grid of the source field
  int margin = 0;
  std::string source;     // free-form label of the extended field
  /// Discrete H2 norm of the extension over that of the source.
  double h2_ratio = 0.0;

  /// Values at the nodes of `domain`.
  Field restrict() const;
};

/// Order-2 reflection u(-s) = 6u(s) - 8u(2s) + 3u(3s) across every face,
/// one direction after another so corners are filled too. Reproduces
/// polynomials of degree <= 2. Needs an axis-aligned rectangle with
/// 3 * margin <= elements in each direction, else Error(out_of_support).
ExtendedField extend_h2(const Field& u0, int margin, std::string source = "u0");

/// Elements needed so that S_eps of a field on the enlarged grid covers the
/// domain, including a layer for central differences.
int extension_margin(const StructuredGrid& domain, double eps, const Lattice& lattice);

/// Central second differences, squared and integrated over interior nodes.
double discrete_h2_norm(const Field& u);

/// Lambda(x / eps) at the nodes of `grid` by periodic multilinear
/// interpolation of the cell solution; component c + n * j.
Field periodic_corrector(const CellSolution& cell, const StructuredGrid& grid, double eps);

/// g_tilde(x / eps) at element midpoints, taken from the cell element
/// containing the point.
ElementCoefficients periodic_flux_matrix(const CellSolution& cell, const StructuredGrid& grid, double eps);

/// S_eps b(grad) u0~ at the nodes of u0's grid. On a torus u0 is used as is;
/// on a rectangle it is extended first with extend_h2.
Field smoothed_symbol_gradient(const Field& u0, const CellSolution& cell, double eps);

/// u0 + eps Lambda(x / eps) w for a nodal m-component field w.
Field add_corrector(const Field& u0, const CellSolution& cell, double eps, const Field& w);

/// v_eps = u0 + eps Lambda^eps S_eps b(grad) u0~, restricted to u0's grid.
Field corrector_smoothed(const Field& u0, const CellSolution& cell, double eps);

/// u0 + eps Lambda^eps b(grad) u0 with the in-domain nodal gradient.
Field corrector_plain(const Field& u0, const CellSolution& cell, double eps);

/// Per-element product of g with an m-component element field.
Field apply_matrix(const ElementCoefficients& g, const Field& v);

/// g b(grad) u at element midpoints (m components).
Field flux(const Field& u, const SymbolOperator& op, const ElementCoefficients& g);

/// g_tilde^eps times the element average of S_eps b(grad) u0~.
Field flux_approx_smoothed(const Field& u0, const CellSolution& cell, double eps);

/// g_tilde^eps b(grad) u0 at element midpoints.
Field flux_approx_plain(const Field& u0, const CellSolution& cell, double eps);

}  // namespace perihom
