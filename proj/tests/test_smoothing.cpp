#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "perihom/error.hpp"
#include "perihom/smoothing.hpp"
#include "test_util.hpp"

using namespace perihom;
using perihom::testing::random_field;

constexpr double kPi = std::numbers::pi;

namespace {

StructuredGrid torus(int elements) {
  const double len[2] = {1.0, 1.0};
  const int el[2] = {elements, elements};
  return StructuredGrid::torus(len, el);
}

StructuredGrid rect(double lo, double hi, int elements) {
  const double len[2] = {hi - lo, hi - lo};
  const int el[2] = {elements, elements};
  return StructuredGrid::rectangle(len, el, Point{lo, lo, 0.0});
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST(Smoothing, PointCount) {
  EXPECT_EQ(smoothing_points(1.0 / 8, 1.0 / 128), 16);
  EXPECT_EQ(smoothing_points(0.1, 0.1), 4);
}

TEST(Smoothing, ConstantUnchanged) {
  const StructuredGrid g = torus(32);
  Field u(g, 2);
  for (std::size_t p = 0; p < g.num_nodes(); ++p) {
    u(p, 0) = 1.5;
    u(p, 1) = -3.0;
  }
  const Field s = steklov_smooth(u, 0.25, unit_lattice(2));
  EXPECT_LT(max_abs_diff(s, u), 1e-14);
}

TEST(Smoothing, AffineUnchangedOnBothKernels) {
  const StructuredGrid src = rect(-0.25, 1.25, 48);
  const StructuredGrid dst = rect(0.0, 1.0, 32);
  const Field u = Field::from_function(src, 1, [](const Point& x, std::span<double> v) { v[0] = 2 * x[0] - x[1] + 0.3; });
  const Field expected = Field::from_function(dst, 1, [](const Point& x, std::span<double> v) { v[0] = 2 * x[0] - x[1] + 0.3; });
  ASSERT_TRUE(separable_smoothing_applies(src, unit_lattice(2), dst));
  EXPECT_LT(max_abs_diff(steklov_smooth(u, 0.125, unit_lattice(2), dst), expected), 1e-13);
  EXPECT_LT(max_abs_diff(steklov_smooth_direct(u, 0.125, unit_lattice(2), dst), expected), 1e-13);
  // Skewed lattice goes through the direct kernel and is still exact.
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  EXPECT_FALSE(separable_smoothing_applies(src, build_lattice(a), dst));
  EXPECT_LT(max_abs_diff(steklov_smooth(u, 0.125, build_lattice(a), dst), expected), 1e-13);
}

TEST(Smoothing, QuadraticGainsCellSecondMoment) {
  const double len[1] = {2.0};
  const int el[1] = {512};
  const StructuredGrid src = StructuredGrid::rectangle(len, el, Point{-0.5, 0.0, 0.0});
  const Field u = Field::from_function(src, 1, [](const Point& x, std::span<double> v) { v[0] = x[0] * x[0]; });
  const double eps = 0.125;
  const double h = 2.0 / 512;
  const int q = smoothing_points(eps, h);
  const double len_t[1] = {1.0};
  const int el_t[1] = {64};
  const StructuredGrid dst = StructuredGrid::rectangle(len_t, el_t);
  const Field s = steklov_smooth(u, eps, unit_lattice(1), dst);
  // Oracle: x^2 + eps^2/12, up to the midpoint-rule defect eps^2/(12 q^2)
  // and the interpolation defect h^2/4.
  const double slack = eps * eps / (12.0 * q * q) + h * h / 4 + 1e-14;
  for (std::size_t p = 0; p < dst.num_nodes(); ++p) {
    const double x = dst.node_coord(p)[0];
    EXPECT_NEAR(s(p, 0), x * x + eps * eps / 12.0, slack);
  }
}

TEST(Smoothing, SeparableMatchesDirect) {
  const StructuredGrid g = torus(40);
  const Field u = random_field(g, 3, 5);
  for (double eps : {0.1, 0.25, 0.5}) {
    const Field a = steklov_smooth(u, eps, unit_lattice(2));
    const Field b = steklov_smooth_direct(u, eps, unit_lattice(2), g);
    EXPECT_LT(max_abs_diff(a, b), 1e-13) << eps;
  }
  const StructuredGrid src = rect(-0.5, 1.5, 64);
  const StructuredGrid dst = rect(0.0, 1.0, 32);
  const Field v = random_field(src, 1, 6);
  EXPECT_LT(max_abs_diff(steklov_smooth(v, 0.2, unit_lattice(2), dst),
                         steklov_smooth_direct(v, 0.2, unit_lattice(2), dst)),
            1e-13);
}

TEST(Smoothing, OutOfSupport) {
  const StructuredGrid g = rect(0.0, 1.0, 16);
  const Field u = random_field(g, 1, 3);
  for (bool direct : {false, true}) {
    try {
      if (direct) {
        steklov_smooth_direct(u, 0.1, unit_lattice(2), g);
      } else {
        steklov_smooth(u, 0.1, unit_lattice(2));
      }
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::out_of_support);
    }
  }
}

TEST(Smoothing, ContractionOnRandomFields) {
  const StructuredGrid g = torus(32);
  for (int t = 0; t < 100; ++t) {
    const Field u = random_field(g, 1, 100 + t);
    const double eps = 1.0 / (2 + t % 7);
    EXPECT_LE(l2_norm(steklov_smooth(u, eps, unit_lattice(2))), (1 + 1e-10) * l2_norm(u));
  }
}

TEST(Smoothing, CommutesWithDerivatives) {
  std::vector<double> errs;
  for (int n : {32, 64, 128}) {
    const StructuredGrid g = torus(n);
    const Field u = Field::from_function(g, 1, [](const Point& x, std::span<double> v) {
      v[0] = std::sin(2 * kPi * x[0]) * std::cos(4 * kPi * x[1]);
    });
    const double eps = 0.25;
    const Field d_then_s = steklov_smooth(nodal_gradient(u), eps, unit_lattice(2));
    const Field s_then_d = nodal_gradient(steklov_smooth(u, eps, unit_lattice(2)));
    errs.push_back(l2_norm(d_then_s - s_then_d));
  }
  // Discrete commutation holds to O(h) or better.
  EXPECT_LT(errs[2], 0.6 * errs[1] + 1e-13);
  EXPECT_LT(errs[2], 1e-2);
}

TEST(Smoothing, DistanceToIdentityBound) {
  const Lattice lat = unit_lattice(2);
  const StructuredGrid g = torus(128);
  const double h = 1.0 / 128;
  for (int k = 1; k <= 4; ++k) {
    const Field u = Field::from_function(g, 1, [k](const Point& x, std::span<double> v) {
      v[0] = std::cos(2 * kPi * k * x[0]) + std::sin(2 * kPi * x[1]);
    });
    for (double eps : {0.05, 0.1, 0.2}) {
      const double lhs = l2_norm(steklov_smooth(u, eps, lat) - u);
      EXPECT_LE(lhs, eps * lat.r1 * h1_seminorm(u) + 2 * h * h);
    }
  }
}

TEST(Smoothing, CheckerboardMultiplierBound) {
  // || [f^eps] S_eps || <= |Omega|^{-1/2} ||f||_{L2(Omega)} on the torus.
  const double eps = 0.125;
  const int n = 128;  // h = eps / 16
  const StructuredGrid g = torus(n);
  const Lattice lat = unit_lattice(2);
  auto f = [&](const Point& x) {
    const double t0 = x[0] / eps - std::floor(x[0] / eps);
    const double t1 = x[1] / eps - std::floor(x[1] / eps);
    return ((t0 >= 0.5) != (t1 >= 0.5)) ? 4.0 : 1.0;
  };
  const double bound = std::sqrt((1.0 + 16.0) / 2.0);
  // Power iteration on T^* T with T = f S (S is symmetric on the torus).
  Field v = random_field(g, 1, 77);
  double estimate = 0.0;
  for (int it = 0; it < 60; ++it) {
    Field w = steklov_smooth(v, eps, lat);
    for (std::size_t p = 0; p < g.num_nodes(); ++p) {
      const double fv = f(g.node_coord(p));
      w(p, 0) *= fv * fv;
    }
    w = steklov_smooth(w, eps, lat);
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < g.num_nodes(); ++p) {
      num += w(p, 0) * v(p, 0);
      den += v(p, 0) * v(p, 0);
    }
    estimate = std::sqrt(num / den);
    const double norm = std::sqrt(std::inner_product(w.values().begin(), w.values().end(), w.values().begin(), 0.0));
    for (double& x : w.values()) x /= norm;
    v = w;
  }
  EXPECT_LE(estimate, bound * 1.05);
  EXPECT_GT(estimate, 1.0);
}
