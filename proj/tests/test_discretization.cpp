#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "perihom/coefficient.hpp"
#include "perihom/error.hpp"
#include "perihom/field.hpp"
#include "test_util.hpp"

using namespace perihom;
using perihom::testing::random_field;
using perihom::testing::unit_square;

constexpr double kPi = std::numbers::pi;

TEST(Grid, CellGridWrapsAndMapsThroughBasis) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  const StructuredGrid g = StructuredGrid::cell(build_lattice(a), 8);
  EXPECT_TRUE(g.periodic());
  EXPECT_EQ(g.num_nodes(), 64u);
  EXPECT_EQ(g.num_elements(), 64u);
  Index3 i{8, -1, 0};
  ASSERT_TRUE(g.normalize(i));
  EXPECT_EQ(i[0], 0);
  EXPECT_EQ(i[1], 7);
  const Point x = g.node_coord(Index3{4, 4, 0});
  EXPECT_NEAR(x[0], 0.75, 1e-15);
  EXPECT_NEAR(x[1], 0.5, 1e-15);
  EXPECT_NEAR(g.total_volume(), 1.0, 1e-14);
}

TEST(Grid, CellGridRejectsSmallOrNonPowerOfTwo) {
  EXPECT_THROW(StructuredGrid::cell(unit_lattice(2), 4), Error);
  EXPECT_THROW(StructuredGrid::cell(unit_lattice(2), 24), Error);
}

TEST(Grid, RectangleCoversClosedBox) {
  const double len[2] = {2.0, 1.0};
  const int el[2] = {4, 2};
  const StructuredGrid g = StructuredGrid::rectangle(len, el);
  EXPECT_EQ(g.nodes(0), 5);
  EXPECT_EQ(g.nodes(1), 3);
  const Point far = g.node_coord(Index3{4, 2, 0});
  EXPECT_DOUBLE_EQ(far[0], 2.0);
  EXPECT_DOUBLE_EQ(far[1], 1.0);
  Index3 out{5, 0, 0};
  EXPECT_FALSE(g.normalize(out));
}

TEST(Grid, SubgridSharesNodes) {
  const StructuredGrid g = unit_square(8);
  const StructuredGrid s = g.subgrid(Index3{2, 3, 0}, Index3{4, 2, 1});
  EXPECT_EQ(s.nodes(0), 5);
  const Point a = s.node_coord(Index3{1, 1, 0});
  const Point b = g.node_coord(Index3{3, 4, 0});
  EXPECT_DOUBLE_EQ(a[0], b[0]);
  EXPECT_DOUBLE_EQ(a[1], b[1]);
  EXPECT_THROW(g.subgrid(Index3{6, 0, 0}, Index3{4, 1, 1}), Error);
}

TEST(ApplyBD, ConstantGivesZero) {
  const StructuredGrid g = unit_square(8);
  Field u(g, 1);
  for (double& v : u.values()) v = 3.5;
  const Field b = apply_bD(scalar_gradient(2), u);
  for (double v : b.values()) EXPECT_EQ(v, 0.0);
}

TEST(ApplyBD, AffineIsExact) {
  const StructuredGrid g = unit_square(8);
  const Field u = Field::from_function(g, 1, [](const Point& x, std::span<double> v) { v[0] = x[0]; });
  const Field b = apply_bD(scalar_gradient(2), u);
  for (std::size_t e = 0; e < g.num_elements(); ++e) {
    EXPECT_NEAR(b(e, 0), 1.0, 1e-13);
    EXPECT_NEAR(b(e, 1), 0.0, 1e-13);
  }
  const Field nb = apply_bD_nodal(scalar_gradient(2), u);
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    EXPECT_NEAR(nb(n, 0), 1.0, 1e-13);
    EXPECT_NEAR(nb(n, 1), 0.0, 1e-13);
  }
}

TEST(ApplyBD, AffineOnSkewedCellIsExact) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.4, 0.1, 0.9;
  const StructuredGrid g = StructuredGrid::cell(build_lattice(a), 8);
  const Field u = Field::from_function(g, 1, [](const Point& x, std::span<double> v) {
    v[0] = 2.0 * x[0] - 3.0 * x[1];
  });
  const Field grad = element_gradient(u);
  // Elements that do not wrap around see the affine field exactly.
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      const std::size_t e = g.element_index(Index3{i, j, 0});
      EXPECT_NEAR(grad(e, 0), 2.0, 1e-12);
      EXPECT_NEAR(grad(e, 1), -3.0, 1e-12);
    }
  }
}

TEST(ApplyBD, SineDerivativeOnCellGridIsSecondOrder) {
  const StructuredGrid g = StructuredGrid::cell(unit_lattice(2), 64);
  const Field u = Field::from_function(g, 1, [](const Point& x, std::span<double> v) {
    v[0] = std::sin(2 * kPi * x[0]);
  });
  const Field b = apply_bD(scalar_gradient(2), u);
  double worst = 0.0;
  for (std::size_t e = 0; e < g.num_elements(); ++e) {
    const Point x = g.element_midpoint(e);
    worst = std::max(worst, std::abs(b(e, 0) - 2 * kPi * std::cos(2 * kPi * x[0])));
  }
  // O(N^-2) with constant (2 pi)^3 / 24
  EXPECT_LT(worst, std::pow(2 * kPi, 3) / 24.0 / (64.0 * 64.0) * 1.01);
}

TEST(ApplyBD, ComponentMismatch) {
  const StructuredGrid g = unit_square(4);
  Field u(g, 1);
  try {
    apply_bD(elasticity_2d(), u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::component_mismatch);
  }
}

TEST(Norms, ConstantsAndZero) {
  const StructuredGrid g = unit_square(16);
  Field one(g, 1);
  for (double& v : one.values()) v = 1.0;
  EXPECT_NEAR(l2_norm(one), 1.0, 1e-14);
  EXPECT_NEAR(h1_norm(one), 1.0, 1e-14);
  Field c(g, 1);
  for (double& v : c.values()) v = -2.5;
  EXPECT_NEAR(h1_norm(c), 2.5, 1e-13);
  EXPECT_EQ(l2_norm(Field(g, 2)), 0.0);
}

TEST(Norms, AffineH1) {
  const StructuredGrid g = unit_square(16);
  const Field u = Field::from_function(g, 1, [](const Point& x, std::span<double> v) { v[0] = x[0]; });
  const double l2 = l2_norm(u);
  EXPECT_NEAR(l2, std::sqrt(1.0 / 3.0), 1e-13);  // Q1 integration of x^2 is exact
  EXPECT_NEAR(h1_norm(u), std::sqrt(l2 * l2 + 1.0), 1e-13);
}

TEST(Norms, SineOnUnitSquare) {
  const StructuredGrid g = unit_square(128);
  const Field u = Field::from_function(g, 1, [](const Point& x, std::span<double> v) {
    v[0] = std::sin(kPi * x[0]);
  });
  EXPECT_NEAR(l2_norm(u), std::sqrt(0.5), 1e-3);
  EXPECT_NEAR(h1_seminorm(u), kPi / std::sqrt(2.0), 1e-2);
}

TEST(Norms, MaskRestrictsToBox) {
  const StructuredGrid g = unit_square(16);
  Field one(g, 1);
  for (double& v : one.values()) v = 1.0;
  Box b;
  b.lower = {0.25, 0.25, 0.0};
  b.upper = {0.75, 0.75, 0.0};
  EXPECT_NEAR(l2_norm(one, b), 0.5, 1e-14);
}

TEST(Norms, HomogeneityAndTriangle) {
  const StructuredGrid g = unit_square(12);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int t = 0; t < 20; ++t) {
    const Field u = random_field(g, 2, 1000 + t);
    const Field v = random_field(g, 2, 2000 + t);
    const double c = coef(rng);
    Field cu = u;
    cu *= c;
    EXPECT_NEAR(l2_norm(cu), std::abs(c) * l2_norm(u), 1e-12 * std::abs(c) * l2_norm(u));
    EXPECT_NEAR(h1_norm(cu), std::abs(c) * h1_norm(u), 1e-12 * std::abs(c) * h1_norm(u));
    const Field w = u + v;
    EXPECT_LE(l2_norm(w), l2_norm(u) + l2_norm(v) + 1e-14);
    EXPECT_LE(h1_norm(w), h1_norm(u) + h1_norm(v) + 1e-14);
  }
}

TEST(Sampling, IdentityCoefficient) {
  const StructuredGrid g = unit_square(4);
  const ElementCoefficients s =
      sample_coefficient(constant_coefficient(Eigen::MatrixXd::Identity(2, 2)), g, 0.5, unit_lattice(2));
  for (std::size_t e = 0; e < s.count; ++e) EXPECT_TRUE(s.at(e).isIdentity(0.0));
}

TEST(Sampling, RescaledTrigAtOneEighth) {
  // 1D grid with an element centred at x = 1/8.
  const double len[1] = {0.25};
  const int el[1] = {1};
  const StructuredGrid g = StructuredGrid::rectangle(len, el);
  const ElementCoefficients s = sample_coefficient(trig_coefficient(1, 2.0, 1.0), g, 0.25, unit_lattice(1));
  EXPECT_NEAR(s.data[0], 2.0 + std::cos(kPi), 1e-14);
}

TEST(Sampling, CheckerboardMatchesIndicator) {
  const StructuredGrid g = StructuredGrid::cell(unit_lattice(2), 16);
  const ElementCoefficients s = sample_coefficient(checkerboard_coefficient(1, 2, 1.0, 4.0), g, 1.0, unit_lattice(2));
  for (std::size_t e = 0; e < s.count; ++e) {
    const Point x = g.element_midpoint(e);
    const bool high = (x[0] >= 0.5) != (x[1] >= 0.5);
    EXPECT_EQ(s.data[e], high ? 4.0 : 1.0);
  }
  const CoefficientBounds b = coefficient_bounds(s);
  EXPECT_EQ(b.c, 1.0);
  EXPECT_EQ(b.c_tilde, 4.0);
}

TEST(Sampling, RejectsNonSymmetricAndIndefinite) {
  const StructuredGrid g = unit_square(2);
  Eigen::MatrixXd ns(2, 2);
  ns << 1.0, 0.5, 0.0, 1.0;
  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  for (const auto& m : {ns, indef}) {
    try {
      sample_coefficient(constant_coefficient(m), g, 1.0, unit_lattice(2));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_coefficient);
    }
  }
}

TEST(Sampling, SampledCoefficientLayout) {
  // 2x2 sub-cells, index fastest in tau_1.
  const PeriodicCoefficient g = sampled_coefficient(1, 2, 2, {1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(g.at_fractional({0.1, 0.1, 0.0})(0, 0), 1.0);
  EXPECT_EQ(g.at_fractional({0.7, 0.1, 0.0})(0, 0), 2.0);
  EXPECT_EQ(g.at_fractional({0.1, 0.7, 0.0})(0, 0), 3.0);
  EXPECT_EQ(g.at_fractional({-0.3, 1.7, 0.0})(0, 0), 4.0);
}

TEST(FieldCsv, HeaderAndRows) {
  const StructuredGrid g = unit_square(2);
  const Field u = Field::from_function(g, 2, [](const Point& x, std::span<double> v) {
    v[0] = x[0];
    v[1] = x[1];
  });
  const std::string path = ::testing::TempDir() + "field.csv";
  write_field_csv(u, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x1,x2,comp1,comp2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 9);
}
