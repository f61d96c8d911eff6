#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "perihom/error.hpp"
#include "perihom/lattice.hpp"
#include "perihom/symbol.hpp"

using namespace perihom;

namespace {

// Independent brute force: shortest nonzero vector of the lattice generated
// by the columns of b, over a wider multi-index range than the library uses.
double brute_force_half_shortest(const Eigen::MatrixXd& b, int radius) {
  double best = INFINITY;
  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      if (i == 0 && j == 0) continue;
      best = std::min(best, (b.col(0) * i + b.col(1) * j).norm());
    }
  }
  return 0.5 * best;
}

}  // namespace

TEST(Lattice, UnitSquare) {
  const Lattice lat = unit_lattice(2);
  EXPECT_NEAR(lat.cell_volume, 1.0, 1e-15);
  EXPECT_NEAR(lat.r0, std::numbers::pi, 1e-12);
  EXPECT_NEAR(lat.r1, std::sqrt(2.0) / 2.0, 1e-15);
  EXPECT_TRUE(lat.dual_basis.isApprox(2.0 * std::numbers::pi * Eigen::Matrix2d::Identity()));
  EXPECT_LE(lat.duality_residual(), 1e-12);
}

TEST(Lattice, ScalingByTwo) {
  const Lattice unit = unit_lattice(2);
  const Lattice big = build_lattice(Eigen::MatrixXd(2.0 * Eigen::Matrix2d::Identity()));
  EXPECT_TRUE(big.dual_basis.isApprox(0.5 * unit.dual_basis));
  EXPECT_NEAR(big.r0, 0.5 * unit.r0, 1e-12);
  EXPECT_NEAR(big.r1, 2.0 * unit.r1, 1e-12);
  EXPECT_NEAR(big.cell_volume, 4.0, 1e-12);
}

TEST(Lattice, SkewedBasisMatchesBruteForce) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  const Lattice lat = build_lattice(a);
  EXPECT_NEAR(lat.cell_volume, 1.0, 1e-14);
  EXPECT_LE(lat.duality_residual(), 1e-12);
  const Eigen::MatrixXd dual = 2.0 * std::numbers::pi * a.inverse().transpose();
  EXPECT_NEAR(lat.r0, brute_force_half_shortest(dual, 10), 1e-12);
  // Diameter of the parallelogram: longest diagonal.
  EXPECT_NEAR(lat.r1, 0.5 * std::max((a.col(0) + a.col(1)).norm(), (a.col(0) - a.col(1)).norm()), 1e-14);
}

TEST(Lattice, FractionalCoordinates) {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.3, 0.1, 1.5;
  const Lattice lat = build_lattice(a);
  Eigen::VectorXd tau(2);
  tau << 0.25, -0.4;
  EXPECT_TRUE(lat.to_fractional(a * tau).isApprox(tau, 1e-13));
}

TEST(Lattice, RandomBasesSatisfyDuality) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) += 0.3 * u(rng);
    const Lattice lat = build_lattice(a);
    EXPECT_LE(lat.duality_residual(), 1e-12);
    EXPECT_GT(lat.r0, 0.0);
    EXPECT_GT(lat.r1, 0.0);
    EXPECT_NEAR(lat.cell_volume, std::abs(a.determinant()), 1e-12);
  }
}

TEST(Lattice, SingularBasisRejected) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 2.0, 0.5, 1.0;
  try {
    build_lattice(a);
    FAIL() << "expected degenerate_lattice";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_lattice);
  }
}

TEST(Symbol, ScalarGradientEvaluation) {
  const SymbolOperator op = scalar_gradient(2);
  Eigen::VectorXd xi(2);
  xi << 1.0, 2.0;
  const Eigen::MatrixXd b = symbol_eval(op, xi);
  ASSERT_EQ(b.rows(), 2);
  ASSERT_EQ(b.cols(), 1);
  EXPECT_EQ(b(0, 0), 1.0);
  EXPECT_EQ(b(1, 0), 2.0);
  EXPECT_TRUE(symbol_eval(op, Eigen::VectorXd::Zero(2)).isZero());
}

TEST(Symbol, ScalarGradientGramIsSquaredLength) {
  const SymbolOperator op = scalar_gradient(3);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd xi(3);
    for (int j = 0; j < 3; ++j) xi(j) = g(rng);
    const Eigen::MatrixXd b = symbol_eval(op, xi);
    EXPECT_EQ((b.transpose() * b)(0, 0), xi.squaredNorm());
  }
}

TEST(Symbol, ElasticityConvention) {
  const SymbolOperator op = elasticity_2d();
  Eigen::VectorXd xi(2);
  xi << 1.0, 0.0;
  Eigen::MatrixXd expected(3, 2);
  expected << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0 / std::sqrt(2.0);
  EXPECT_TRUE(symbol_eval(op, xi).isApprox(expected, 1e-15));
  // rank 2 in every direction
  for (int k = 0; k < 64; ++k) {
    const double t = std::numbers::pi * k / 64;
    xi << std::cos(t), std::sin(t);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(symbol_eval(op, xi));
    EXPECT_GT(svd.singularValues().minCoeff(), 0.5);
  }
}

TEST(Symbol, MismatchedShapesRejected) {
  try {
    make_symbol({Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 2)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::component_mismatch);
  }
  try {
    make_symbol({Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(1, 2)});
    FAIL() << "m < n must be rejected";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::component_mismatch);
  }
}

TEST(RankCondition, ScalarGradient) {
  for (int d = 1; d <= 3; ++d) {
    const EllipticityConstants c = check_rank_condition(scalar_gradient(d));
    EXPECT_NEAR(c.alpha0, 1.0, 1e-12);
    EXPECT_NEAR(c.alpha1, 1.0, 1e-12);
  }
}

TEST(RankCondition, RepeatedMatrixFailsOnAntidiagonal) {
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.5;
  const SymbolOperator op = make_symbol({b, b});
  try {
    check_rank_condition(op);
    FAIL() << "expected non_elliptic";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_elliptic);
  }
  Eigen::VectorXd theta(2);
  theta << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  EXPECT_LT(symbol_eval(op, theta).norm(), 1e-15);
}

TEST(RankCondition, TooFewSamplesIsConfigurationError) {
  try {
    check_rank_condition(scalar_gradient(2), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
}

TEST(RankCondition, ElasticityAgainstDenseSampling) {
  const SymbolOperator op = elasticity_2d();
  const EllipticityConstants c = check_rank_condition(op);
  // Oracle: brute-force eigenvalues on 10^4 directions.
  double lo = INFINITY, hi = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double t = std::numbers::pi * (k + 0.37) / 10000;
    Eigen::VectorXd xi(2);
    xi << std::cos(t), std::sin(t);
    const Eigen::MatrixXd b = symbol_eval(op, xi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.transpose() * b);
    lo = std::min(lo, es.eigenvalues()(0));
    hi = std::max(hi, es.eigenvalues()(1));
  }
  EXPECT_NEAR(c.alpha0, lo, 1e-6);
  EXPECT_NEAR(c.alpha1, hi, 1e-6);
  EXPECT_NEAR(c.alpha0, 0.5, 1e-9);
  EXPECT_NEAR(c.alpha1, 1.0, 1e-9);
}

TEST(RankCondition, BoundsHoldOnFreshDirections) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::vector<SymbolOperator> ops = {scalar_gradient(2), scalar_gradient(3), elasticity_2d()};
  Eigen::MatrixXd b1(3, 2), b2(3, 2);
  b1 << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
  b2 << 0.0, 0.2, 0.0, 0.0, 1.0, 0.5;
  ops.push_back(make_symbol({b1, b2}));
  for (const auto& op : ops) {
    const EllipticityConstants c = check_rank_condition(op);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd xi(op.dim);
      for (int j = 0; j < op.dim; ++j) xi(j) = g(rng);
      xi.normalize();
      const Eigen::MatrixXd b = symbol_eval(op, xi);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.transpose() * b);
      EXPECT_GE(es.eigenvalues().minCoeff(), c.alpha0 - 1e-12);
      EXPECT_LE(es.eigenvalues().maxCoeff(), c.alpha1 + 1e-12);
    }
  }
}
