#include "perihom/approximation.hpp"

#include <cmath>

#include "perihom/error.hpp"
#include "perihom/smoothing.hpp"

namespace perihom {

namespace {

// Snap near-integers so matched grids hit cell nodes exactly.
double snap(double s) {
  const double r = std::round(s);
  return std::abs(s - r) < 1e-9 ? r : s;
}

int wrap(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Logical cell-grid coordinates of x / eps.
Point cell_logical(const CellSolution& cell, const Point& x, double eps) {
  const int d = cell.grid.dim();
  Point y{};
  for (int j = 0; j < d; ++j) y[j] = x[j] / eps;
  Point s = cell.grid.physical_to_logical(y);
  for (int j = 0; j < d; ++j) s[j] = snap(s[j]);
  return s;
}

Field extend_direction(const Field& u, int dir, int margin) {
  const StructuredGrid& g = u.grid();
  const int d = g.dim(), k = u.components();
  const int e = g.elements(dir);
  double lengths[kMaxDim];
  int elements[kMaxDim];
  Point origin = g.origin();
  for (int j = 0; j < d; ++j) {
    elements[j] = g.elements(j) + (j == dir ? 2 * margin : 0);
    lengths[j] = g.spacing(j) * elements[j];
  }
  origin[dir] -= margin * g.spacing(dir);
  const StructuredGrid big =
      StructuredGrid::rectangle(std::span<const double>(lengths, d), std::span<const int>(elements, d), origin);
  Field out(big, k);
#pragma omp parallel for schedule(static)
  for (std::size_t node = 0; node < big.num_nodes(); ++node) {
    Index3 i = big.node_multi(node);
    const int old = i[dir] - margin;
    auto at = [&](int idx, int c) {
      Index3 src = i;
      src[dir] = idx;
      return u(g.node_index(src), c);
    };
    for (int c = 0; c < k; ++c) {
      double v;
      if (old < 0) {
        const int s = -old;
        v = 6.0 * at(s, c) - 8.0 * at(2 * s, c) + 3.0 * at(3 * s, c);
      } else if (old > e) {
        const int s = old - e;
        v = 6.0 * at(e - s, c) - 8.0 * at(e - 2 * s, c) + 3.0 * at(e - 3 * s, c);
      } else {
        v = at(old, c);
      }
      out(node, c) = v;
    }
  }
  return out;
}

void check_cell(const Field& u0, const CellSolution& cell, double eps) {
  if (u0.components() != cell.n()) throw Error(ErrorKind::component_mismatch, "u0 and corrector sizes differ");
  if (u0.grid().dim() != cell.grid.dim()) throw Error(ErrorKind::component_mismatch, "u0 and cell dimensions differ");
  if (!(eps > 0.0)) throw Error(ErrorKind::configuration, "eps must be positive");
}

}  // namespace

Field ExtendedField::restrict() const {
  Field out(domain, field.components());
  const StructuredGrid& big = field.grid();
  for (std::size_t node = 0; node < domain.num_nodes(); ++node) {
    Index3 i = domain.node_multi(node);
    for (int j = 0; j < domain.dim(); ++j) i[j] += margin;
    const std::size_t src = big.node_index(i);
    for (int c = 0; c < out.components(); ++c) out(node, c) = field(src, c);
  }
  return out;
}

ExtendedField extend_h2(const Field& u0, int margin, std::string source) {
  const StructuredGrid& g = u0.grid();
  if (g.periodic() || !g.axis_aligned() || u0.location() != Location::node) {
    throw Error(ErrorKind::configuration, "extension needs a nodal field on an axis-aligned rectangle");
  }
  if (margin < 0) throw Error(ErrorKind::configuration, "negative extension margin");
  for (int j = 0; j < g.dim(); ++j) {
    if (3 * margin > g.elements(j)) {
      throw Error(ErrorKind::out_of_support, "extension margin " + std::to_string(margin) + " exceeds a third of the " +
                                                 std::to_string(g.elements(j)) + " elements in direction " +
                                                 std::to_string(j + 1));
    }
  }
  ExtendedField ext;
  ext.domain = g;
  ext.margin = margin;
  ext.source = std::move(source);
  ext.field = u0;
  for (int j = 0; j < g.dim(); ++j) ext.field = extend_direction(ext.field, j, margin);
  const double inner = discrete_h2_norm(u0);
  ext.h2_ratio = inner > 0.0 ? discrete_h2_norm(ext.field) / inner : 1.0;
  return ext;
}

int extension_margin(const StructuredGrid& domain, double eps, const Lattice& lattice) {
  int margin = 0;
  for (int j = 0; j < domain.dim(); ++j) {
    // Half the extent of eps * cell along axis j.
    const double reach = 0.5 * eps * lattice.basis.row(j).cwiseAbs().sum();
    margin = std::max(margin, static_cast<int>(std::ceil(reach / domain.spacing(j) - 1e-9)) + 1);
  }
  return margin;
}

double discrete_h2_norm(const Field& u) {
  const StructuredGrid& g = u.grid();
  const int d = g.dim(), k = u.components();
  double second = 0.0;
  for (std::size_t node = 0; node < g.num_nodes(); ++node) {
    const Index3 i = g.node_multi(node);
    bool interior = true;
    for (int j = 0; j < d && !g.periodic(); ++j) interior = interior && i[j] > 0 && i[j] < g.nodes(j) - 1;
    if (!interior) continue;
    auto at = [&](Index3 q, int c) {
      g.normalize(q);
      return u(g.node_index(q), c);
    };
    for (int c = 0; c < k; ++c) {
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          double v;
          const double ha = g.spacing(a), hb = g.spacing(b);
          if (a == b) {
            Index3 p = i, q = i;
            ++p[a];
            --q[a];
            v = (at(p, c) - 2.0 * u(node, c) + at(q, c)) / (ha * ha);
          } else {
            Index3 pp = i, pm = i, mp = i, mm = i;
            ++pp[a], ++pp[b], ++pm[a], --pm[b], --mp[a], ++mp[b], --mm[a], --mm[b];
            v = (at(pp, c) - at(pm, c) - at(mp, c) + at(mm, c)) / (4.0 * ha * hb);
          }
          second += v * v;
        }
      }
    }
  }
  second *= g.total_volume() / static_cast<double>(g.num_nodes());
  const double h1 = h1_norm(u);
  return std::sqrt(h1 * h1 + second);
}

Field periodic_corrector(const CellSolution& cell, const StructuredGrid& grid, double eps) {
  const int d = grid.dim(), k = cell.lambda.components();
  const StructuredGrid& cg = cell.grid;
  Field out(grid, k);
#pragma omp parallel for schedule(static)
  for (std::size_t node = 0; node < grid.num_nodes(); ++node) {
    const Point s = cell_logical(cell, grid.node_coord(node), eps);
    Index3 base{0, 0, 0};
    Point t{};
    for (int j = 0; j < d; ++j) {
      const double f = std::floor(s[j]);
      base[j] = static_cast<int>(f);
      t[j] = s[j] - f;
    }
    for (int c = 0; c < k; ++c) out(node, c) = 0.0;
    for (int a = 0; a < (1 << d); ++a) {
      double w = 1.0;
      Index3 q{0, 0, 0};
      for (int j = 0; j < d; ++j) {
        const bool up = a & (1 << j);
        w *= up ? t[j] : 1.0 - t[j];
        q[j] = wrap(base[j] + (up ? 1 : 0), cg.nodes(j));
      }
      if (w == 0.0) continue;
      const std::size_t idx = cg.node_index(q);
      for (int c = 0; c < k; ++c) out(node, c) += w * cell.lambda(idx, c);
    }
  }
  return out;
}

ElementCoefficients periodic_flux_matrix(const CellSolution& cell, const StructuredGrid& grid, double eps) {
  const int d = grid.dim(), m = cell.m();
  const StructuredGrid& cg = cell.grid;
  ElementCoefficients out;
  out.m = m;
  out.count = grid.num_elements();
  out.data.resize(out.count * m * m);
#pragma omp parallel for schedule(static)
  for (std::size_t e = 0; e < out.count; ++e) {
    const Point s = cell_logical(cell, grid.element_midpoint(e), eps);
    Index3 q{0, 0, 0};
    for (int j = 0; j < d; ++j) q[j] = wrap(static_cast<int>(std::floor(s[j])), cg.elements(j));
    const auto src = cell.g_tilde.at(cg.element_index(q));
    std::copy(src.data(), src.data() + m * m, out.data.begin() + e * m * m);
  }
  return out;
}

Field smoothed_symbol_gradient(const Field& u0, const CellSolution& cell, double eps) {
  check_cell(u0, cell, eps);
  const StructuredGrid& g = u0.grid();
  if (g.periodic()) return steklov_smooth(apply_bD_nodal(cell.op, u0), eps, cell.lattice, g);
  const ExtendedField ext = extend_h2(u0, extension_margin(g, eps, cell.lattice));
  return steklov_smooth(apply_bD_nodal(cell.op, ext.field), eps, cell.lattice, g);
}

Field add_corrector(const Field& u0, const CellSolution& cell, double eps, const Field& w) {
  check_cell(u0, cell, eps);
  const int n = cell.n(), m = cell.m();
  if (w.components() != m || !w.grid().same_layout(u0.grid())) {
    throw Error(ErrorKind::component_mismatch, "corrector input must be an m-component field on u0's grid");
  }
  const Field lam = periodic_corrector(cell, u0.grid(), eps);
  Field v = u0;
#pragma omp parallel for schedule(static)
  for (std::size_t node = 0; node < v.points(); ++node) {
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += lam(node, c + n * j) * w(node, j);
      v(node, c) += eps * s;
    }
  }
  return v;
}

Field corrector_smoothed(const Field& u0, const CellSolution& cell, double eps) {
  return add_corrector(u0, cell, eps, smoothed_symbol_gradient(u0, cell, eps));
}

Field corrector_plain(const Field& u0, const CellSolution& cell, double eps) {
  return add_corrector(u0, cell, eps, apply_bD_nodal(cell.op, u0));
}

Field apply_matrix(const ElementCoefficients& g, const Field& v) {
  const int m = g.m;
  Field out(v.grid(), m, Location::element);
#pragma omp parallel for schedule(static)
  for (std::size_t e = 0; e < g.count; ++e) {
    const auto a = g.at(e);
    for (int r = 0; r < m; ++r) {
      double s = 0.0;
      for (int c = 0; c < m; ++c) s += a(r, c) * v(e, c);
      out(e, r) = s;
    }
  }
  return out;
}

Field flux(const Field& u, const SymbolOperator& op, const ElementCoefficients& g) {
  if (g.count != u.grid().num_elements() || g.m != op.rows) {
    throw Error(ErrorKind::component_mismatch, "coefficient does not match the grid or operator");
  }
  return apply_matrix(g, apply_bD(op, u));
}

Field flux_approx_smoothed(const Field& u0, const CellSolution& cell, double eps) {
  return apply_matrix(periodic_flux_matrix(cell, u0.grid(), eps),
                      element_average(smoothed_symbol_gradient(u0, cell, eps)));
}

Field flux_approx_plain(const Field& u0, const CellSolution& cell, double eps) {
  check_cell(u0, cell, eps);
  return apply_matrix(periodic_flux_matrix(cell, u0.grid(), eps), apply_bD(cell.op, u0));
}

}  // namespace perihom
