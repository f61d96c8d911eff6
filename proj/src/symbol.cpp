#include "perihom/symbol.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "perihom/error.hpp"

namespace perihom {

namespace {

constexpr double kRankTolerance = 1e-10;

std::pair<double, double> extreme_eigenvalues(const SymbolOperator& op, const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd b = symbol_eval(op, theta);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.transpose() * b, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

Eigen::VectorXd from_angles(int dim, double a, double b) {
  Eigen::VectorXd v(dim);
  if (dim == 2) {
    v << std::cos(a), std::sin(a);
  } else {
    v << std::sin(a) * std::cos(b), std::sin(a) * std::sin(b), std::cos(a);
  }
  return v;
}

std::pair<double, double> to_angles(const Eigen::VectorXd& v) {
  if (v.size() == 2) return {std::atan2(v[1], v[0]), 0.0};
  return {std::acos(std::clamp(v[2], -1.0, 1.0)), std::atan2(v[1], v[0])};
}

// Pattern search over the angular parametrization, minimizing f.
Eigen::VectorXd refine_direction(int dim, const Eigen::VectorXd& start, double step,
                                 const std::function<double(const Eigen::VectorXd&)>& f) {
  auto [a, b] = to_angles(start);
  double best = f(start);
  for (int iter = 0; iter < 200 && step > 1e-14; ++iter) {
    bool improved = false;
    for (int axis = 0; axis < dim - 1; ++axis) {
      for (double s : {-step, step}) {
        const double na = axis == 0 ? a + s : a;
        const double nb = axis == 1 ? b + s : b;
        const double value = f(from_angles(dim, na, nb));
        if (value < best) {
          best = value;
          a = na;
          b = nb;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return from_angles(dim, a, b);
}

}  // namespace

Eigen::MatrixXd SymbolOperator::block(int component) const {
  Eigen::MatrixXd out(rows, dim);
  for (int l = 0; l < dim; ++l) out.col(l) = matrices[l].col(component);
  return out;
}

SymbolOperator make_symbol(std::vector<Eigen::MatrixXd> matrices, std::string name) {
  if (matrices.empty() || matrices.size() > 3) {
    throw Error(ErrorKind::component_mismatch, "b(D) needs between 1 and 3 matrices b_l");
  }
  SymbolOperator op;
  op.dim = static_cast<int>(matrices.size());
  op.rows = static_cast<int>(matrices.front().rows());
  op.cols = static_cast<int>(matrices.front().cols());
  for (const auto& b : matrices) {
    if (b.rows() != op.rows || b.cols() != op.cols) {
      throw Error(ErrorKind::component_mismatch, "all b_l must share one shape");
    }
    if (!b.allFinite()) throw Error(ErrorKind::component_mismatch, "b_l has non-finite entries");
  }
  if (op.rows < op.cols || op.cols < 1) {
    throw Error(ErrorKind::component_mismatch, "b(D) requires m >= n >= 1");
  }
  op.matrices = std::move(matrices);
  op.name = std::move(name);
  return op;
}

SymbolOperator scalar_gradient(int dim) {
  std::vector<Eigen::MatrixXd> b;
  for (int l = 0; l < dim; ++l) {
    Eigen::MatrixXd bl = Eigen::MatrixXd::Zero(dim, 1);
    bl(l, 0) = 1.0;
    b.push_back(bl);
  }
  return make_symbol(std::move(b), "scalar_gradient");
}

SymbolOperator elasticity_2d() {
  const double s = 1.0 / std::numbers::sqrt2;
  Eigen::MatrixXd b1(3, 2), b2(3, 2);
  b1 << 1, 0,
        0, 0,
        0, s;
  b2 << 0, 0,
        0, 1,
        s, 0;
  return make_symbol({b1, b2}, "elasticity_2d");
}

Eigen::MatrixXd symbol_eval(const SymbolOperator& op, const Eigen::VectorXd& xi) {
  if (xi.size() != op.dim) throw Error(ErrorKind::component_mismatch, "xi has wrong dimension");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(op.rows, op.cols);
  for (int l = 0; l < op.dim; ++l) out += op.matrices[l] * xi[l];
  return out;
}

std::vector<Eigen::VectorXd> sphere_directions(int dim, int samples) {
  std::vector<Eigen::VectorXd> dirs;
  if (dim == 1) {
    dirs.push_back(Eigen::VectorXd::Ones(1));
    return dirs;
  }
  dirs.reserve(samples);
  if (dim == 2) {
    // b(-theta)^* b(-theta) = b(theta)^* b(theta), so a half circle suffices.
    for (int k = 0; k < samples; ++k) {
      const double t = std::numbers::pi * k / samples;
      dirs.push_back(from_angles(2, t, 0.0));
    }
    return dirs;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < samples; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / samples;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    Eigen::VectorXd v(3);
    v << r * std::cos(golden * k), r * std::sin(golden * k), z;
    dirs.push_back(v);
  }
  return dirs;
}

EllipticityConstants check_rank_condition(const SymbolOperator& op, int samples) {
  if (samples < 1000) {
    throw Error(ErrorKind::configuration, "rank check needs at least 1000 sample directions");
  }
  const auto dirs = sphere_directions(op.dim, samples);
  EllipticityConstants out;
  out.alpha0 = std::numeric_limits<double>::infinity();
  out.alpha1 = 0.0;
  Eigen::VectorXd argmin = dirs.front();
  Eigen::VectorXd argmax = dirs.front();
  for (const auto& theta : dirs) {
    const auto [lo, hi] = extreme_eigenvalues(op, theta);
    if (lo < out.alpha0) {
      out.alpha0 = lo;
      argmin = theta;
    }
    if (hi > out.alpha1) {
      out.alpha1 = hi;
      argmax = theta;
    }
  }
  if (op.dim > 1 && out.alpha0 >= kRankTolerance) {
    const double step = op.dim == 2 ? std::numbers::pi / samples
                                    : std::sqrt(4.0 * std::numbers::pi / samples);
    const auto lo = [&](const Eigen::VectorXd& t) { return extreme_eigenvalues(op, t).first; };
    const auto hi = [&](const Eigen::VectorXd& t) { return -extreme_eigenvalues(op, t).second; };
    const Eigen::VectorXd tmin = refine_direction(op.dim, argmin, step, lo);
    if (lo(tmin) < out.alpha0) {
      out.alpha0 = lo(tmin);
      argmin = tmin;
    }
    const Eigen::VectorXd tmax = refine_direction(op.dim, argmax, step, hi);
    out.alpha1 = std::max(out.alpha1, -hi(tmax));
  }
  if (out.alpha0 < kRankTolerance) {
    std::ostringstream msg;
    msg << "rank b(theta) < n at theta = (";
    for (int l = 0; l < argmin.size(); ++l) msg << (l ? ", " : "") << argmin[l];
    msg << "), smallest eigenvalue of b^*b = " << out.alpha0;
    throw Error(ErrorKind::non_elliptic, msg.str());
  }
  return out;
}

}  // namespace perihom
