#include "viscomem/cubic_bounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace viscomem;

namespace {

const CubicBox kBox{1.0, 1.0, 2.0, 2.0, 2.0};

}  // namespace

TEST(CubicRoots, VietaRelationsAndResiduals) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<Real> u(0.05, 20.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Real beta = u(rng), a = u(rng), b = u(rng);
    const auto z = cubic_roots(beta, a, b);
    // beta z^3 + z^2 + beta b z + a = beta (z - z0)(z - z1)(z - z2)
    const Complex sum = z[0] + z[1] + z[2];
    const Complex pairs = z[0] * z[1] + z[0] * z[2] + z[1] * z[2];
    const Complex prod = z[0] * z[1] * z[2];
    const Real scale = 1.0 + std::abs(z[0]) + std::abs(z[1]) + std::abs(z[2]);
    EXPECT_NEAR(std::abs(sum + 1.0 / beta), 0.0, 1e-10 * scale);
    EXPECT_NEAR(std::abs(pairs - b), 0.0, 1e-10 * scale * scale);
    EXPECT_NEAR(std::abs(prod + a / beta), 0.0, 1e-10 * scale * scale * scale);
    for (const Complex& x : z) {
      const Complex p = ((beta * x + 1.0) * x + beta * b) * x + a;
      EXPECT_LT(std::abs(p), 1e-9 * (1.0 + beta * std::pow(std::abs(x), 3)));
    }
    EXPECT_EQ(z[0].imag(), 0.0);
    EXPECT_EQ(z[1], std::conj(z[2]));
  }
}

TEST(CubicRoots, KnownFactorization) {
  // (z + 1)(z^2 + 1) = z^3 + z^2 + z + 1: beta = 1, b = 1, a = 1
  const auto z = cubic_roots(1.0, 1.0, 1.0);
  EXPECT_NEAR(z[0].real(), -1.0, 1e-14);
  EXPECT_NEAR(std::abs(z[1] - Complex(0.0, 1.0)), 0.0, 1e-14);
  // (z + 1)(z + 2)(z + 3) / 6 with beta = 1/6: z^3/6 + z^2 + (11/6) z + 1
  const auto r = cubic_roots(1.0 / 6.0, 1.0, 11.0);
  EXPECT_NEAR(r[0].real(), -3.0, 1e-12);
  EXPECT_NEAR(r[1].real(), -2.0, 1e-12);
  EXPECT_NEAR(r[2].real(), -1.0, 1e-12);
}

TEST(Alpha, BoxValue) {
  EXPECT_NEAR(alpha_bound(kBox), 1.0 / 6.0, 1e-15);
  // small b0 beta^2 activates the first branch: 1 - sqrt(1 - 3 * 0.1) = 0.1633
  const CubicBox small{1.0, 1.0, 0.1, 2.0, 2.0};
  EXPECT_NEAR(alpha_bound(small), 1.0 - std::sqrt(0.7), 1e-15);
}

TEST(CubicSpec, RejectsPointsOutsideTheBox) {
  EXPECT_THROW((CubicSpec{kBox, 1.0, 3.0}.validate()), InvalidInput);   // b != 2 a
  EXPECT_THROW((CubicSpec{kBox, 0.5, 1.0}.validate()), InvalidInput);   // a < a0
  EXPECT_NO_THROW((CubicSpec{kBox, 3.0, 6.0}.validate()));
  EXPECT_THROW((CubicBox{0.0, 1.0, 2.0, 2.0, 2.0}.validate()), InvalidInput);
}

TEST(CubicSpec, SignChecksAtTheProofPoints) {
  for (Real a : {1.0, 4.0, 50.0, 900.0}) {
    const CubicSpec s{kBox, a, 2.0 * a};
    EXPECT_LT(s.q(-1.0), 0.0);
    EXPECT_GT(s.q(-a / s.b), 0.0);
    EXPECT_LT(s.r(-0.5), 0.0);
  }
}

TEST(Localization, AllSamplesInsideStrip) {
  const LocalizationReport rep = verify_localization(kBox, 10000, 123);
  EXPECT_GE(rep.samples, 10000u);
  EXPECT_TRUE(rep.all_passed());
  EXPECT_EQ(rep.pass_rate(), 1.0);
  EXPECT_GT(rep.min_slack_left, 0.0);
  EXPECT_GT(rep.min_slack_right, 0.0);
  EXPECT_LT(rep.max_residual, 1e-10);
  EXPECT_TRUE(rep.failures.empty());
}

TEST(Localization, DeterministicAndPrefixStable) {
  const LocalizationReport a = verify_localization(kBox, 300, 9);
  const LocalizationReport b = verify_localization(kBox, 300, 9);
  EXPECT_EQ(a.min_slack_right, b.min_slack_right);
  EXPECT_EQ(a.max_residual, b.max_residual);
  const LocalizationReport prefix = verify_localization(kBox, 100, 9);
  EXPECT_LE(a.min_slack_right, prefix.min_slack_right);
  EXPECT_LE(a.min_slack_left, prefix.min_slack_left);
}

TEST(Product, HandExampleAndHalfPlaneGuards) {
  // z = 1, w = -1 + i: |(2 - i)(2 + i)| = 5 >= 1
  const ProductCheck c = product_inequality(Complex(1.0, 0.0), Complex(-1.0, 1.0));
  EXPECT_NEAR(c.lhs, 5.0, 1e-14);
  EXPECT_NEAR(c.rhs, 1.0, 1e-14);
  EXPECT_TRUE(c.holds);
  EXPECT_THROW(product_inequality(Complex(-1.0, 0.0), Complex(-1.0, 1.0)), InvalidInput);
  EXPECT_THROW(product_inequality(Complex(1.0, 0.0), Complex(0.0, 1.0)), InvalidInput);
}

TEST(Product, RandomPairsAndNearlyTightCase) {
  const ProductReport rep = verify_product_inequality(10000, 77);
  EXPECT_EQ(rep.passed, rep.samples);
  EXPECT_GE(rep.min_margin, 0.0);
  // z -> 0 with w = -x + i x: lhs -> |w|^2 = 2 x^2 >= x^2 = rhs
  const ProductCheck near = product_inequality(Complex(1e-12, 0.0), Complex(-0.5, 0.5));
  EXPECT_NEAR(near.lhs / near.rhs, 2.0, 1e-9);
}
