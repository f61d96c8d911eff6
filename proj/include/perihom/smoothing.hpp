#pragma once

#include "perihom/field.hpp"
#include "perihom/lattice.hpp"

namespace perihom {

/// Quadrature points per direction used to sample the eps-cell.
int smoothing_points(double eps, double h);

/// (S_eps u)(x) = average of u(x - eps A tau) over tau in (-1/2, 1/2)^d,
/// evaluated at the nodes of `target`. The cell average is approximated by
/// the tensor composite midpoint rule with smoothing_points(eps, h) points per
/// direction and multilinear interpolation of u. Throws
/// Error(out_of_support) if a sample leaves a non-periodic source grid.
///
/// Uses the separable parallel kernel when the lattice and both grids are
/// axis-aligned and the target nodes are source nodes; otherwise falls back
/// to steklov_smooth_direct.
Field steklov_smooth(const Field& u, double eps, const Lattice& lattice, const StructuredGrid& target);
Field steklov_smooth(const Field& u, double eps, const Lattice& lattice);

/// Point-by-point evaluation of the same quadrature; serial.
Field steklov_smooth_direct(const Field& u, double eps, const Lattice& lattice, const StructuredGrid& target);

/// Whether steklov_smooth will take the separable path.
bool separable_smoothing_applies(const StructuredGrid& source, const Lattice& lattice, const StructuredGrid& target);

}  // namespace perihom
