#include "perihom/field.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "perihom/error.hpp"
#include "perihom/parallel.hpp"

namespace perihom {

namespace {

void require_same(const Field& a, const Field& b) {
  if (a.components() != b.components() || a.location() != b.location() || a.size() != b.size() ||
      !a.grid().same_layout(b.grid())) {
    throw Error(ErrorKind::component_mismatch, "fields live on different grids or have different shapes");
  }
}

void require_nodal(const Field& u, const char* what) {
  if (u.location() != Location::node) {
    throw Error(ErrorKind::component_mismatch, std::string(what) + " needs a nodal field");
  }
}

// Tensor 2-point Gauss rule on the reference element [0,1]^d: shape values
// and logical derivatives of the 2^d Q1 basis functions at each point.
struct GaussTable {
  int points = 0;
  int corners = 0;
  double weight = 0.0;
  double phi[8][8]{};
  double dphi[8][8][3]{};
};

GaussTable gauss_table(int d) {
  GaussTable t;
  t.points = 1 << d;
  t.corners = 1 << d;
  t.weight = 1.0 / t.points;
  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int q = 0; q < t.points; ++q) {
    double s[3];
    for (int j = 0; j < d; ++j) s[j] = gp[(q >> j) & 1];
    for (int a = 0; a < t.corners; ++a) {
      double v = 1.0;
      for (int j = 0; j < d; ++j) v *= (a >> j) & 1 ? s[j] : 1.0 - s[j];
      t.phi[q][a] = v;
      for (int l = 0; l < d; ++l) {
        double g = 1.0;
        for (int j = 0; j < d; ++j) {
          if (j == l) {
            g *= (a >> j) & 1 ? 1.0 : -1.0;
          } else {
            g *= (a >> j) & 1 ? s[j] : 1.0 - s[j];
          }
        }
        t.dphi[q][a][l] = g;
      }
    }
  }
  return t;
}

bool masked_out(const StructuredGrid& grid, std::size_t e, const std::optional<Box>& mask) {
  return mask && !mask->contains(grid.element_midpoint(e), grid.dim());
}

}  // namespace

Field::Field(StructuredGrid grid, int components, Location where)
    : grid_(std::move(grid)), components_(components), location_(where) {
  if (components < 1) throw Error(ErrorKind::component_mismatch, "field needs at least one component");
  values_.assign(points() * static_cast<std::size_t>(components), 0.0);
}

Field Field::from_function(const StructuredGrid& grid, int components,
                           const std::function<void(const Point&, std::span<double>)>& f, Location where) {
  Field out(grid, components, where);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.points());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Point x = where == Location::node ? grid.node_coord(static_cast<std::size_t>(i))
                                            : grid.element_midpoint(static_cast<std::size_t>(i));
    f(x, std::span<double>(out.values_.data() + i * components, components));
  }
  return out;
}

Field& Field::operator+=(const Field& other) {
  require_same(*this, other);
  axpy(1.0, other.values_, values_);
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same(*this, other);
  axpy(-1.0, other.values_, values_);
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

bool Field::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Field operator-(Field a, const Field& b) { return a -= b; }
Field operator+(Field a, const Field& b) { return a += b; }

Field element_gradient(const Field& u) {
  require_nodal(u, "element_gradient");
  const StructuredGrid& grid = u.grid();
  const int d = grid.dim();
  const int k = u.components();
  const int corners = grid.nodes_per_element();
  const double edge_weight = 1.0 / (corners / 2);
  const Eigen::MatrixXd jit = grid.jacobian_inverse().transpose();
  Field out(grid, k * d, Location::element);
  const std::ptrdiff_t ne = static_cast<std::ptrdiff_t>(grid.num_elements());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < ne; ++e) {
    std::array<std::size_t, 8> nodes;
    grid.element_nodes(static_cast<std::size_t>(e), nodes);
    for (int c = 0; c < k; ++c) {
      double logical[3] = {0.0, 0.0, 0.0};
      for (int a = 0; a < corners; ++a) {
        const double v = u(nodes[a], c);
        for (int l = 0; l < d; ++l) logical[l] += ((a >> l) & 1 ? v : -v) * edge_weight;
      }
      for (int r = 0; r < d; ++r) {
        double g = 0.0;
        for (int l = 0; l < d; ++l) g += jit(r, l) * logical[l];
        out(static_cast<std::size_t>(e), c * d + r) = g;
      }
    }
  }
  return out;
}

Field nodal_gradient(const Field& u) {
  require_nodal(u, "nodal_gradient");
  const StructuredGrid& grid = u.grid();
  const int d = grid.dim();
  const int k = u.components();
  if (k > 6) throw Error(ErrorKind::component_mismatch, "nodal_gradient supports at most 6 components");
  const Eigen::MatrixXd jit = grid.jacobian_inverse().transpose();
  Field out(grid, k * d);
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(grid.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < nn; ++n) {
    const Index3 i = grid.node_multi(static_cast<std::size_t>(n));
    double logical[6][3] = {};
    for (int l = 0; l < d; ++l) {
      const int count = grid.nodes(l);
      auto at = [&](int offset, int c) {
        Index3 j = i;
        j[l] += offset;
        grid.normalize(j);
        return u(grid.node_index(j), c);
      };
      for (int c = 0; c < k; ++c) {
        double v;
        if (grid.periodic() || (i[l] > 0 && i[l] < count - 1)) {
          v = 0.5 * (at(1, c) - at(-1, c));
        } else if (count == 2) {
          v = i[l] == 0 ? at(1, c) - at(0, c) : at(0, c) - at(-1, c);
        } else if (i[l] == 0) {
          v = 0.5 * (-3.0 * at(0, c) + 4.0 * at(1, c) - at(2, c));
        } else {
          v = 0.5 * (3.0 * at(0, c) - 4.0 * at(-1, c) + at(-2, c));
        }
        logical[c][l] = v;
      }
    }
    for (int c = 0; c < k; ++c) {
      for (int r = 0; r < d; ++r) {
        double g = 0.0;
        for (int l = 0; l < d; ++l) g += jit(r, l) * logical[c][l];
        out(static_cast<std::size_t>(n), c * d + r) = g;
      }
    }
  }
  return out;
}

Field symbol_from_gradient(const SymbolOperator& op, const Field& gradient) {
  const int d = op.dim;
  const int n = op.cols;
  const int m = op.rows;
  if (gradient.grid().dim() != d || gradient.components() != n * d) {
    throw Error(ErrorKind::component_mismatch, "gradient field does not match the operator (n = " +
                                                   std::to_string(n) + ", d = " + std::to_string(d) + ")");
  }
  Field out(gradient.grid(), m, gradient.location());
  const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(gradient.points());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < np; ++p) {
    for (int r = 0; r < m; ++r) {
      double s = 0.0;
      for (int l = 0; l < d; ++l) {
        for (int c = 0; c < n; ++c) s += op.matrices[l](r, c) * gradient(static_cast<std::size_t>(p), c * d + l);
      }
      out(static_cast<std::size_t>(p), r) = s;
    }
  }
  return out;
}

Field apply_bD(const SymbolOperator& op, const Field& u) {
  if (u.components() != op.cols) {
    throw Error(ErrorKind::component_mismatch, "field has " + std::to_string(u.components()) +
                                                   " components, operator expects " + std::to_string(op.cols));
  }
  return symbol_from_gradient(op, element_gradient(u));
}

Field apply_bD_nodal(const SymbolOperator& op, const Field& u) {
  if (u.components() != op.cols) {
    throw Error(ErrorKind::component_mismatch, "field has " + std::to_string(u.components()) +
                                                   " components, operator expects " + std::to_string(op.cols));
  }
  return symbol_from_gradient(op, nodal_gradient(u));
}

Field element_average(const Field& u) {
  require_nodal(u, "element_average");
  const StructuredGrid& grid = u.grid();
  const int k = u.components();
  const int corners = grid.nodes_per_element();
  Field out(grid, k, Location::element);
  const std::ptrdiff_t ne = static_cast<std::ptrdiff_t>(grid.num_elements());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < ne; ++e) {
    std::array<std::size_t, 8> nodes;
    grid.element_nodes(static_cast<std::size_t>(e), nodes);
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (int a = 0; a < corners; ++a) s += u(nodes[a], c);
      out(static_cast<std::size_t>(e), c) = s / corners;
    }
  }
  return out;
}

double l2_norm(const Field& u, const std::optional<Box>& mask) {
  const StructuredGrid& grid = u.grid();
  const int k = u.components();
  const double vol = grid.element_volume();
  if (u.location() == Location::element) {
    const double s = chunked_sum(grid.num_elements(), [&](std::size_t e) {
      if (masked_out(grid, e, mask)) return 0.0;
      double t = 0.0;
      for (int c = 0; c < k; ++c) t += u(e, c) * u(e, c);
      return t;
    });
    return std::sqrt(s * vol);
  }
  const GaussTable gt = gauss_table(grid.dim());
  const double s = chunked_sum(grid.num_elements(), [&](std::size_t e) {
    if (masked_out(grid, e, mask)) return 0.0;
    std::array<std::size_t, 8> nodes;
    grid.element_nodes(e, nodes);
    double t = 0.0;
    for (int q = 0; q < gt.points; ++q) {
      for (int c = 0; c < k; ++c) {
        double v = 0.0;
        for (int a = 0; a < gt.corners; ++a) v += gt.phi[q][a] * u(nodes[a], c);
        t += v * v;
      }
    }
    return t * gt.weight;
  });
  return std::sqrt(s * vol);
}

double h1_seminorm(const Field& u, const std::optional<Box>& mask) {
  require_nodal(u, "h1_seminorm");
  const StructuredGrid& grid = u.grid();
  const int d = grid.dim();
  const int k = u.components();
  const Eigen::MatrixXd jit = grid.jacobian_inverse().transpose();
  const GaussTable gt = gauss_table(d);
  const double s = chunked_sum(grid.num_elements(), [&](std::size_t e) {
    if (masked_out(grid, e, mask)) return 0.0;
    std::array<std::size_t, 8> nodes;
    grid.element_nodes(e, nodes);
    double t = 0.0;
    for (int q = 0; q < gt.points; ++q) {
      for (int c = 0; c < k; ++c) {
        double logical[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < gt.corners; ++a) {
          const double v = u(nodes[a], c);
          for (int l = 0; l < d; ++l) logical[l] += gt.dphi[q][a][l] * v;
        }
        for (int r = 0; r < d; ++r) {
          double g = 0.0;
          for (int l = 0; l < d; ++l) g += jit(r, l) * logical[l];
          t += g * g;
        }
      }
    }
    return t * gt.weight;
  });
  return std::sqrt(s * grid.element_volume());
}

double h1_norm(const Field& u, const std::optional<Box>& mask) {
  const double a = l2_norm(u, mask);
  const double b = h1_seminorm(u, mask);
  return std::sqrt(a * a + b * b);
}

double l2_inner(const Field& a, const Field& b) {
  require_same(a, b);
  require_nodal(a, "l2_inner");
  const StructuredGrid& grid = a.grid();
  const int k = a.components();
  const GaussTable gt = gauss_table(grid.dim());
  const double s = chunked_sum(grid.num_elements(), [&](std::size_t e) {
    std::array<std::size_t, 8> nodes;
    grid.element_nodes(e, nodes);
    double t = 0.0;
    for (int q = 0; q < gt.points; ++q) {
      for (int c = 0; c < k; ++c) {
        double va = 0.0, vb = 0.0;
        for (int i = 0; i < gt.corners; ++i) {
          va += gt.phi[q][i] * a(nodes[i], c);
          vb += gt.phi[q][i] * b(nodes[i], c);
        }
        t += va * vb;
      }
    }
    return t * gt.weight;
  });
  return s * grid.element_volume();
}

std::vector<double> integral(const Field& u) {
  const StructuredGrid& grid = u.grid();
  const int k = u.components();
  std::vector<double> out(k, 0.0);
  for (int c = 0; c < k; ++c) {
    double s;
    if (u.location() == Location::element) {
      s = chunked_sum(grid.num_elements(), [&](std::size_t e) { return u(e, c); });
    } else {
      const int corners = grid.nodes_per_element();
      s = chunked_sum(grid.num_elements(), [&](std::size_t e) {
        std::array<std::size_t, 8> nodes;
        grid.element_nodes(e, nodes);
        double t = 0.0;
        for (int a = 0; a < corners; ++a) t += u(nodes[a], c);
        return t / corners;
      });
    }
    out[c] = s * grid.element_volume();
  }
  return out;
}

void write_field_csv(const Field& u, const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
  if (!f) throw Error(ErrorKind::io_error, "cannot open " + path + " for writing");
  const StructuredGrid& grid = u.grid();
  const int d = grid.dim();
  for (int j = 0; j < d; ++j) std::fprintf(f.get(), "%sx%d", j ? "," : "", j + 1);
  for (int c = 0; c < u.components(); ++c) std::fprintf(f.get(), ",comp%d", c + 1);
  std::fputc('\n', f.get());
  for (std::size_t p = 0; p < u.points(); ++p) {
    const Point x = u.location() == Location::node ? grid.node_coord(p) : grid.element_midpoint(p);
    for (int j = 0; j < d; ++j) std::fprintf(f.get(), "%s%.17g", j ? "," : "", x[j]);
    for (int c = 0; c < u.components(); ++c) std::fprintf(f.get(), ",%.17g", u(p, c));
    std::fputc('\n', f.get());
  }
  if (std::ferror(f.get())) throw Error(ErrorKind::io_error, "write failed for " + path);
}

}  // namespace perihom
