#include "perihom/smoothing.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "perihom/error.hpp"

namespace perihom {

namespace {

constexpr double kSnap = 1e-9;

double min_spacing(const StructuredGrid& g) {
  double h = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.dim(); ++j) h = std::min(h, g.jacobian().col(j).norm());
  return h;
}

void require_compatible(const Field& u, double eps, const Lattice& lattice, const StructuredGrid& target) {
  if (u.location() != Location::node) throw Error(ErrorKind::component_mismatch, "smoothing needs a nodal field");
  if (!(eps > 0.0)) throw Error(ErrorKind::configuration, "eps must be positive");
  if (lattice.dim != u.grid().dim() || target.dim() != u.grid().dim()) {
    throw Error(ErrorKind::component_mismatch, "smoothing: dimension mismatch");
  }
}

// Multilinear interpolation of u at logical position s of its grid. Returns
// false when s falls outside a non-periodic grid.
bool interpolate(const Field& u, const Point& s, double* out) {
  const StructuredGrid& g = u.grid();
  const int d = g.dim();
  const int k = u.components();
  Index3 base{0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int j = 0; j < d; ++j) {
    double sj = s[j];
    const double r = std::round(sj);
    if (std::abs(sj - r) < kSnap) sj = r;
    int i = static_cast<int>(std::floor(sj));
    double t = sj - i;
    if (!g.periodic()) {
      if (i == g.nodes(j) - 1 && t == 0.0) {
        i -= 1;
        t = 1.0;
      }
      if (i < 0 || i + 1 >= g.nodes(j)) {
        if (!(g.nodes(j) == 1 && i == 0)) return false;
      }
    }
    base[j] = i;
    frac[j] = t;
  }
  for (int c = 0; c < k; ++c) out[c] = 0.0;
  for (int a = 0; a < (1 << d); ++a) {
    double w = 1.0;
    Index3 idx = base;
    for (int j = 0; j < d; ++j) {
      if ((a >> j) & 1) {
        w *= frac[j];
        ++idx[j];
      } else {
        w *= 1.0 - frac[j];
      }
    }
    if (w == 0.0) continue;
    if (!g.normalize(idx)) return false;
    const std::size_t node = g.node_index(idx);
    for (int c = 0; c < k; ++c) out[c] += w * u(node, c);
  }
  return true;
}

// Logical offset of target node 0 inside the source grid, if it is a node.
bool integer_offset(const StructuredGrid& source, const StructuredGrid& target, Index3& offset) {
  const Point s = source.physical_to_logical(target.origin());
  for (int j = 0; j < source.dim(); ++j) {
    const double r = std::round(s[j]);
    if (std::abs(s[j] - r) > kSnap) return false;
    offset[j] = static_cast<int>(r);
  }
  return true;
}

}  // namespace

int smoothing_points(double eps, double h) { return std::max(4, static_cast<int>(std::ceil(eps / h - kSnap))); }

bool separable_smoothing_applies(const StructuredGrid& source, const Lattice& lattice, const StructuredGrid& target) {
  const int d = source.dim();
  if (!source.axis_aligned() || !target.axis_aligned()) return false;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && lattice.basis(i, j) != 0.0) return false;
    }
    if (std::abs(source.spacing(i) - target.spacing(i)) > kSnap * source.spacing(i)) return false;
  }
  Index3 offset;
  return integer_offset(source, target, offset);
}

Field steklov_smooth_direct(const Field& u, double eps, const Lattice& lattice, const StructuredGrid& target) {
  require_compatible(u, eps, lattice, target);
  const StructuredGrid& src = u.grid();
  const int d = src.dim();
  const int k = u.components();
  const int q = smoothing_points(eps, min_spacing(src));
  int total = 1;
  for (int j = 0; j < d; ++j) total *= q;
  Field out(target, k);
  std::vector<double> sample(k);
  for (std::size_t node = 0; node < target.num_nodes(); ++node) {
    const Point x = target.node_coord(node);
    std::vector<double> acc(k, 0.0);
    for (int t = 0; t < total; ++t) {
      int rest = t;
      double tau[3] = {0.0, 0.0, 0.0};
      for (int j = 0; j < d; ++j) {
        tau[j] = -0.5 + (rest % q + 0.5) / q;
        rest /= q;
      }
      Point y = x;
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) y[r] -= eps * lattice.basis(r, c) * tau[c];
      }
      if (!interpolate(u, src.physical_to_logical(y), sample.data())) {
        throw Error(ErrorKind::out_of_support,
                    "smoothing window at node " + std::to_string(node) + " leaves the source grid");
      }
      for (int c = 0; c < k; ++c) acc[c] += sample[c];
    }
    for (int c = 0; c < k; ++c) out(node, c) = acc[c] / total;
  }
  return out;
}

Field steklov_smooth(const Field& u, double eps, const Lattice& lattice, const StructuredGrid& target) {
  require_compatible(u, eps, lattice, target);
  const StructuredGrid& src = u.grid();
  if (!separable_smoothing_applies(src, lattice, target)) return steklov_smooth_direct(u, eps, lattice, target);
  const int d = src.dim();
  const int k = u.components();
  const int q = smoothing_points(eps, min_spacing(src));
  const Index3& counts = src.node_counts();

  // Pass j averages along direction j with a fixed 1D kernel; samples that
  // leave a non-periodic grid poison the value with NaN.
  std::vector<double> cur = u.values();
  std::vector<double> next(cur.size());
  for (int j = 0; j < d; ++j) {
    const double shift = eps * lattice.basis(j, j) / src.spacing(j);
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    std::vector<std::pair<int, double>> taps;
    for (int t = 0; t < q; ++t) {
      double s = -shift * (-0.5 + (t + 0.5) / q);
      const double r = std::round(s);
      if (std::abs(s - r) < kSnap) s = r;
      const int i0 = static_cast<int>(std::floor(s));
      const double frac = s - i0;
      taps.emplace_back(i0, (1.0 - frac) / q);
      if (frac != 0.0) taps.emplace_back(i0 + 1, frac / q);
      lo = std::min(lo, i0);
      hi = std::max(hi, frac != 0.0 ? i0 + 1 : i0);
    }
    std::vector<double> weights(hi - lo + 1, 0.0);
    for (const auto& [o, w] : taps) weights[o - lo] += w;

    std::size_t stride = 1;
    for (int i = 0; i < j; ++i) stride *= counts[i];
    const std::size_t len = counts[j];
    const std::size_t lines = src.num_nodes() / len;
    const bool periodic = src.periodic();
    const std::ptrdiff_t nlines = static_cast<std::ptrdiff_t>(lines);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t line = 0; line < nlines; ++line) {
      const std::size_t inner = static_cast<std::size_t>(line) % stride;
      const std::size_t outer = static_cast<std::size_t>(line) / stride;
      const std::size_t start = inner + outer * stride * len;
      std::vector<double> acc(k);
      for (std::size_t i = 0; i < len; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        bool ok = true;
        for (int o = lo; o <= hi; ++o) {
          const double w = weights[o - lo];
          if (w == 0.0) continue;
          std::ptrdiff_t p = static_cast<std::ptrdiff_t>(i) + o;
          if (periodic) {
            p %= static_cast<std::ptrdiff_t>(len);
            if (p < 0) p += static_cast<std::ptrdiff_t>(len);
          } else if (p < 0 || p >= static_cast<std::ptrdiff_t>(len)) {
            ok = false;
            break;
          }
          const double* v = cur.data() + (start + static_cast<std::size_t>(p) * stride) * k;
          for (int c = 0; c < k; ++c) acc[c] += w * v[c];
        }
        double* dst = next.data() + (start + i * stride) * k;
        for (int c = 0; c < k; ++c) dst[c] = ok ? acc[c] : std::numeric_limits<double>::quiet_NaN();
      }
    }
    cur.swap(next);
  }

  Index3 offset{0, 0, 0};
  integer_offset(src, target, offset);
  Field out(target, k);
  const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(target.num_nodes());
  bool missing = false;
#pragma omp parallel for schedule(static) reduction(|| : missing)
  for (std::ptrdiff_t node = 0; node < nt; ++node) {
    Index3 i = target.node_multi(static_cast<std::size_t>(node));
    for (int j = 0; j < d; ++j) i[j] += offset[j];
    if (!src.normalize(i)) {
      missing = true;
      continue;
    }
    const double* v = cur.data() + src.node_index(i) * k;
    for (int c = 0; c < k; ++c) {
      if (std::isnan(v[c])) missing = true;
      out(static_cast<std::size_t>(node), c) = v[c];
    }
  }
  if (missing) throw Error(ErrorKind::out_of_support, "smoothing window leaves the source grid");
  return out;
}

Field steklov_smooth(const Field& u, double eps, const Lattice& lattice) {
  return steklov_smooth(u, eps, lattice, u.grid());
}

}  // namespace perihom
