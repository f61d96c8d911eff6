#include "perihom/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "perihom/error.hpp"

namespace perihom {

namespace {

double wrap01(double t) {
  double f = t - std::floor(t);
  if (f >= 1.0) f = 0.0;
  return f;
}

SmallMatrix scaled_identity(int m, double s) {
  SmallMatrix out = SmallMatrix::Identity(m, m);
  out *= s;
  return out;
}

void require_size(int m) {
  if (m < 1 || m > 6) throw Error(ErrorKind::component_mismatch, "coefficient size must be in 1..6");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::invalid_coefficient, std::string(what) + " must be positive and finite");
  }
}

}  // namespace

PeriodicCoefficient::PeriodicCoefficient(int size, Function f, std::string name)
    : size_(size), f_(std::move(f)), name_(std::move(name)) {
  require_size(size);
}

SmallMatrix PeriodicCoefficient::at_fractional(const Point& tau) const {
  Point w{wrap01(tau[0]), wrap01(tau[1]), wrap01(tau[2])};
  return f_(w);
}

PeriodicCoefficient constant_coefficient(const Eigen::MatrixXd& value) {
  if (value.rows() != value.cols()) throw Error(ErrorKind::component_mismatch, "coefficient must be square");
  const SmallMatrix v = value;
  return PeriodicCoefficient(static_cast<int>(value.rows()), [v](const Point&) { return v; }, "constant");
}

PeriodicCoefficient laminate_coefficient(int m, double low, double high, double fraction, int axis) {
  require_positive(low, "laminate low value");
  require_positive(high, "laminate high value");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::invalid_coefficient, "laminate fraction must lie in (0, 1)");
  }
  if (axis < 0 || axis >= kMaxDim) throw Error(ErrorKind::configuration, "laminate axis out of range");
  return PeriodicCoefficient(
      m, [=](const Point& t) { return scaled_identity(m, t[axis] < fraction ? low : high); }, "laminate");
}

PeriodicCoefficient checkerboard_coefficient(int m, int dim, double low, double high) {
  require_positive(low, "checkerboard low value");
  require_positive(high, "checkerboard high value");
  return PeriodicCoefficient(
      m,
      [=](const Point& t) {
        int parity = 0;
        for (int j = 0; j < dim; ++j) parity += t[j] >= 0.5 ? 1 : 0;
        return scaled_identity(m, parity % 2 == 0 ? low : high);
      },
      "checkerboard");
}

PeriodicCoefficient trig_coefficient(int m, double mean, double amplitude, int axis) {
  if (!(mean - std::abs(amplitude) > 0.0)) {
    throw Error(ErrorKind::invalid_coefficient, "trig coefficient needs mean > |amplitude|");
  }
  return PeriodicCoefficient(
      m,
      [=](const Point& t) {
        return scaled_identity(m, mean + amplitude * std::cos(2.0 * std::numbers::pi * t[axis]));
      },
      "trig");
}

PeriodicCoefficient divfree_diag_coefficient(double a0, double a1, double b0, double b1) {
  if (!(a0 - std::abs(a1) > 0.0) || !(b0 - std::abs(b1) > 0.0)) {
    throw Error(ErrorKind::invalid_coefficient, "divfree_diag needs a0 > |a1| and b0 > |b1|");
  }
  return PeriodicCoefficient(
      2,
      [=](const Point& t) {
        SmallMatrix out = SmallMatrix::Zero(2, 2);
        out(0, 0) = a0 + a1 * std::cos(2.0 * std::numbers::pi * t[1]);
        out(1, 1) = b0 + b1 * std::cos(2.0 * std::numbers::pi * t[0]);
        return out;
      },
      "divfree_diag");
}

PeriodicCoefficient sampled_coefficient(int m, int dim, int per_dim, const std::vector<double>& values) {
  require_size(m);
  if (per_dim < 1 || dim < 1 || dim > kMaxDim) throw Error(ErrorKind::configuration, "bad sample grid");
  std::size_t cells = 1;
  for (int j = 0; j < dim; ++j) cells *= static_cast<std::size_t>(per_dim);
  const bool scalar = values.size() == cells;
  if (!scalar && values.size() != cells * m * m) {
    throw Error(ErrorKind::component_mismatch,
                "sample count " + std::to_string(values.size()) + " matches neither K^d nor K^d*m*m");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_coefficient, "non-finite coefficient sample");
  }
  return PeriodicCoefficient(
      m,
      [=](const Point& t) {
        std::size_t idx = 0, stride = 1;
        for (int j = 0; j < dim; ++j) {
          const int k = std::min(per_dim - 1, static_cast<int>(t[j] * per_dim));
          idx += stride * static_cast<std::size_t>(k);
          stride *= static_cast<std::size_t>(per_dim);
        }
        if (scalar) return scaled_identity(m, values[idx]);
        SmallMatrix out(m, m);
        for (int c = 0; c < m; ++c) {
          for (int r = 0; r < m; ++r) out(r, c) = values[idx * m * m + r + c * m];
        }
        return out;
      },
      "samples");
}

ElementCoefficients sample_coefficient(const PeriodicCoefficient& g, const StructuredGrid& grid, double eps,
                                       const Lattice& lattice) {
  if (!(eps > 0.0)) throw Error(ErrorKind::configuration, "eps must be positive");
  if (lattice.dim != grid.dim()) throw Error(ErrorKind::component_mismatch, "lattice and grid dimensions differ");
  const int d = grid.dim();
  const int m = g.size();
  const Eigen::MatrixXd to_tau = lattice.basis.inverse() / eps;
  ElementCoefficients out;
  out.m = m;
  out.count = grid.num_elements();
  out.data.resize(out.count * m * m);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(out.count);
  bool bad = false;
  std::ptrdiff_t bad_element = -1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < count; ++e) {
    const Point x = grid.element_midpoint(static_cast<std::size_t>(e));
    Point tau{};
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) tau[r] += to_tau(r, c) * x[c];
    }
    SmallMatrix v = g.at_fractional(tau);
    const double scale = v.cwiseAbs().maxCoeff();
    bool ok = v.rows() == m && v.cols() == m && v.allFinite() && scale > 0.0 &&
              (v - v.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale;
    if (ok) {
      v = 0.5 * (v + v.transpose());
      if (m == 1) {
        ok = v(0, 0) > 0.0;
      } else {
        Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(v)};
        ok = llt.info() == Eigen::Success;
      }
    }
    if (!ok) {
#pragma omp critical(perihom_sample)
      {
        if (!bad || e < bad_element) bad_element = e;
        bad = true;
      }
      continue;
    }
    std::copy(v.data(), v.data() + m * m, out.data.begin() + e * m * m);
  }
  if (bad) {
    throw Error(ErrorKind::invalid_coefficient, "coefficient '" + g.name() +
                                                    "' is not symmetric positive definite at element " +
                                                    std::to_string(bad_element));
  }
  return out;
}

ElementCoefficients uniform_coefficient(const Eigen::MatrixXd& value, std::size_t count) {
  ElementCoefficients out;
  out.m = static_cast<int>(value.rows());
  out.count = count;
  out.data.resize(count * out.m * out.m);
  for (std::size_t e = 0; e < count; ++e) out.at(e) = value;
  return out;
}

CoefficientBounds coefficient_bounds(const ElementCoefficients& g) {
  CoefficientBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t e = 0; e < g.count; ++e) {
    if (g.m == 1) {
      const double v = g.data[e];
      b.c = std::min(b.c, v);
      b.c_tilde = std::max(b.c_tilde, v);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.at(e), Eigen::EigenvaluesOnly);
    b.c = std::min(b.c, es.eigenvalues()(0));
    b.c_tilde = std::max(b.c_tilde, es.eigenvalues()(g.m - 1));
  }
  return b;
}

}  // namespace perihom
