#pragma once

// Root localization for p(z) = beta z^3 + z^2 + beta b z + a over the parameter
// box c0 a <= b <= c1 a, b >= b0, a >= a0, and the half-plane product inequality.

#include "viscomem/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace viscomem {

/// Box parameters (beta, a0, b0, c0, c1).
struct CubicBox {
  Real beta = 1.0;
  Real a0 = 1.0;
  Real b0 = 1.0;
  Real c0 = 2.0;
  Real c1 = 2.0;

  void validate() const {
    VISCOMEM_REQUIRE(beta > 0.0, InvalidInput, "CubicBox: beta must be > 0");
    VISCOMEM_REQUIRE(a0 > 0.0 && b0 > 0.0, InvalidInput, "CubicBox: a0 and b0 must be > 0");
    VISCOMEM_REQUIRE(c0 > 1.0 && c1 >= c0, InvalidInput, "CubicBox: need c1 >= c0 > 1");
  }

  /// True when (a, b) satisfies the box constraints up to a relative slack.
  [[nodiscard]] bool contains(Real a, Real b, Real rel = 1e-12) const {
    return a >= a0 * (1.0 - rel) && b >= b0 * (1.0 - rel) && b >= c0 * a * (1.0 - rel) &&
           b <= c1 * a * (1.0 + rel);
  }
};

/// A single polynomial from the box.
struct CubicSpec {
  CubicBox box;
  Real a = 1.0;
  Real b = 2.0;

  void validate() const {
    box.validate();
    VISCOMEM_REQUIRE(std::isfinite(a) && std::isfinite(b), InvalidInput,
                     "CubicSpec: a and b must be finite");
    VISCOMEM_REQUIRE(box.contains(a, b), InvalidInput,
                     "CubicSpec: (a, b) = (" + std::to_string(a) + ", " + std::to_string(b) +
                         ") violates c0 a <= b <= c1 a, b >= b0, a >= a0");
  }

  [[nodiscard]] Complex p(Complex z) const {
    return ((box.beta * z + 1.0) * z + box.beta * b) * z + a;
  }
  [[nodiscard]] Complex dp(Complex z) const {
    return (3.0 * box.beta * z + 2.0) * z + box.beta * b;
  }
  /// Real-root branch q(x) = p(x).
  [[nodiscard]] Real q(Real x) const { return p(Complex(x, 0.0)).real(); }
  /// Real-part equation of the complex-pair branch.
  [[nodiscard]] Real r(Real x) const {
    const Real be = box.beta;
    return 8.0 * be * x * x * x + 8.0 * x * x + 2.0 * (1.0 / be + be * b) * x + b - a;
  }
};

/// Roots of beta z^3 + z^2 + beta b z + a without any box check.
inline std::array<Complex, 3> cubic_roots(Real beta, Real a, Real b) {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  // companion matrix of z^3 + (1/beta) z^2 + b z + a/beta
  C(0, 0) = -1.0 / beta;
  C(0, 1) = -b;
  C(0, 2) = -a / beta;
  C(1, 0) = 1.0;
  C(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(C, false);
  VISCOMEM_REQUIRE(es.info() == Eigen::Success, SolverFailure,
                   "solve_cubic: companion eigenvalue iteration failed");
  std::array<Complex, 3> z{es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
  const auto poly = [&](Complex x) { return ((beta * x + 1.0) * x + beta * b) * x + a; };
  const auto dpoly = [&](Complex x) { return (3.0 * beta * x + 2.0) * x + beta * b; };
  for (auto& x : z) {
    const Complex d = dpoly(x);
    if (std::abs(d) > 0.0) x -= poly(x) / d;
  }
  // order: real root first (smallest |Im|), then the pair with Im >= 0 first
  std::sort(z.begin(), z.end(), [](Complex u, Complex v) {
    if (std::abs(u.imag()) != std::abs(v.imag())) return std::abs(u.imag()) < std::abs(v.imag());
    return u.imag() > v.imag();
  });
  const Real scale = 1.0 + std::abs(z[1]) + std::abs(z[2]);
  if (std::abs(z[1].imag()) > 1e-12 * scale) {
    // one real root and a conjugate pair
    z[0] = Complex(z[0].real(), 0.0);
    const Complex w(0.5 * (z[1].real() + z[2].real()),
                    0.5 * (std::abs(z[1].imag()) + std::abs(z[2].imag())));
    z[1] = w;
    z[2] = std::conj(w);
  } else {
    for (auto& x : z) x = Complex(x.real(), 0.0);
    std::sort(z.begin(), z.end(), [](Complex u, Complex v) { return u.real() < v.real(); });
  }
  return z;
}

/// Roots of p for a spec inside its box.
inline std::array<Complex, 3> solve_cubic(const CubicSpec& spec) {
  spec.validate();
  return cubic_roots(spec.box.beta, spec.a, spec.b);
}

/// alpha = min{b~0 a0 beta, 1/(c1 beta), beta (c0 - 1) a0 / (2 (c1 a0 beta^2 + 1))},
/// b~0 = 1 - sqrt(1 - 3 b0 beta^2); the first term only when 3 b0 beta^2 < 1.
inline Real alpha_bound(const CubicBox& box) {
  box.validate();
  const Real be = box.beta;
  Real alpha = std::min(1.0 / (box.c1 * be),
                        be * (box.c0 - 1.0) * box.a0 / (2.0 * (box.c1 * box.a0 * be * be + 1.0)));
  if (3.0 * box.b0 * be * be < 1.0) {
    const Real bt = 1.0 - std::sqrt(1.0 - 3.0 * box.b0 * be * be);
    alpha = std::min(alpha, bt * box.a0 * be);
  }
  return alpha;
}

struct LocalizationReport {
  std::size_t samples = 0;
  std::size_t passed = 0;          // roots strictly inside (-1/beta, -alpha)
  std::size_t sign_checks_passed = 0;
  std::size_t pair_identity_checked = 0;
  std::size_t pair_identity_passed = 0;
  Real alpha = 0.0;
  Real min_slack_left = std::numeric_limits<Real>::infinity();   // min Re(z) + 1/beta
  Real min_slack_right = std::numeric_limits<Real>::infinity();  // min -alpha - Re(z)
  Real max_residual = 0.0;  // max |p(z)| / (1 + |z|^3)
  CubicSpec worst;          // spec attaining the smallest slack
  std::vector<CubicSpec> failures;

  [[nodiscard]] Real pass_rate() const {
    return samples == 0 ? 1.0 : static_cast<Real>(passed) / static_cast<Real>(samples);
  }
  [[nodiscard]] bool all_passed() const {
    return passed == samples && sign_checks_passed == samples &&
           pair_identity_passed == pair_identity_checked;
  }
};

namespace detail {

/// Deterministic corner and edge points of the box with a <= a_max.
inline std::vector<std::pair<Real, Real>> box_boundary_points(const CubicBox& box, Real a_max) {
  std::vector<std::pair<Real, Real>> pts;
  for (Real a : {box.a0, box.a0 * (1.0 + 1e-9), std::sqrt(box.a0 * a_max), a_max}) {
    const Real lo = std::max(box.c0 * a, box.b0);
    const Real hi = box.c1 * a;
    if (lo > hi) continue;
    pts.emplace_back(a, lo);
    pts.emplace_back(a, hi);
    pts.emplace_back(a, 0.5 * (lo + hi));
  }
  return pts;
}

inline void check_spec(const CubicSpec& spec, Real alpha, LocalizationReport& rep) {
  const auto z = solve_cubic(spec);
  const Real be = spec.box.beta;
  bool inside = true;
  Real slack = std::numeric_limits<Real>::infinity();
  for (const Complex& x : z) {
    const Real left = x.real() + 1.0 / be;
    const Real right = -alpha - x.real();
    inside = inside && left > 0.0 && right > 0.0;
    rep.min_slack_left = std::min(rep.min_slack_left, left);
    rep.min_slack_right = std::min(rep.min_slack_right, right);
    slack = std::min({slack, left, right});
    rep.max_residual = std::max(rep.max_residual,
                                std::abs(spec.p(x)) / (1.0 + std::pow(std::abs(x), 3)));
  }
  const bool signs = spec.q(-1.0 / be) < 0.0 && spec.q(-spec.a / (be * spec.b)) > 0.0 &&
                     spec.r(-1.0 / (2.0 * be)) < 0.0;
  if (z[1].imag() != 0.0) {
    ++rep.pair_identity_checked;
    const Real x = z[1].real();
    const Real lhs = z[1].imag() * z[1].imag();
    const Real rhs = 3.0 * x * x + (2.0 / be) * x + spec.b;
    if (std::abs(lhs - rhs) <= 1e-8 * std::max({std::abs(lhs), std::abs(rhs), 1e-300})) {
      ++rep.pair_identity_passed;
    }
  }
  ++rep.samples;
  if (inside) ++rep.passed;
  if (signs) ++rep.sign_checks_passed;
  if (!inside || !signs) rep.failures.push_back(spec);
  if (slack <= std::min(rep.min_slack_left, rep.min_slack_right)) rep.worst = spec;
}

}  // namespace detail

/// Samples (a, b) from the box with a log-uniform in [a0, a_max_factor * a0] and
/// b uniform in its admissible interval, plus corner and edge points, and checks
/// that every root has real part in (-1/beta, -alpha). Sample j draws from the
/// stream derive_seed(seed, j), so the result does not depend on partitioning.
inline LocalizationReport verify_localization(const CubicBox& box, std::size_t samples,
                                              std::uint64_t seed, Real a_max_factor = 1e3) {
  box.validate();
  VISCOMEM_REQUIRE(a_max_factor > 1.0, InvalidInput,
                   "verify_localization: a_max_factor must exceed 1");
  LocalizationReport rep;
  rep.alpha = alpha_bound(box);
  const Real a_max = a_max_factor * box.a0;
  for (const auto& [a, b] : detail::box_boundary_points(box, a_max)) {
    detail::check_spec(CubicSpec{box, a, b}, rep.alpha, rep);
  }
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  const Real log_lo = std::log(box.a0);
  const Real log_hi = std::log(a_max);
  for (std::size_t j = 0; j < samples; ++j) {
    std::mt19937_64 rng(derive_seed(seed, j));
    // rejection on the lower a-range where b0 may exceed c1 a
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Real a = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
      const Real lo = std::max(box.c0 * a, box.b0);
      const Real hi = box.c1 * a;
      if (lo > hi) continue;
      const Real b = std::min(hi, lo + (hi - lo) * unit(rng));
      detail::check_spec(CubicSpec{box, a, b}, rep.alpha, rep);
      break;
    }
  }
  return rep;
}

struct ProductCheck {
  Real lhs = 0.0;
  Real rhs = 0.0;
  Real margin = 0.0;  // lhs - rhs
  bool holds = true;
};

/// |(z - w)(z - conj w)| >= |Re w| |Im w| for Re z > 0, Re w < 0.
inline ProductCheck product_inequality(Complex z, Complex w) {
  VISCOMEM_REQUIRE(z.real() > 0.0, InvalidInput, "product_inequality: requires Re(z) > 0");
  VISCOMEM_REQUIRE(w.real() < 0.0, InvalidInput, "product_inequality: requires Re(w) < 0");
  ProductCheck c;
  c.lhs = std::abs((z - w) * (z - std::conj(w)));
  c.rhs = std::abs(w.real()) * std::abs(w.imag());
  c.margin = c.lhs - c.rhs;
  c.holds = c.margin >= 0.0;
  return c;
}

struct ProductReport {
  std::size_t samples = 0;
  std::size_t passed = 0;
  Real min_margin = std::numeric_limits<Real>::infinity();
  Complex worst_z{};
  Complex worst_w{};
};

/// Random half-plane pairs with components log-uniform in magnitude over
/// [1e-3, 1e3] and random signs where allowed.
inline ProductReport verify_product_inequality(std::size_t samples, std::uint64_t seed) {
  ProductReport rep;
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  for (std::size_t j = 0; j < samples; ++j) {
    std::mt19937_64 rng(derive_seed(seed, j));
    const auto mag = [&] { return std::pow(10.0, -3.0 + 6.0 * unit(rng)); };
    const auto sgn = [&] { return unit(rng) < 0.5 ? -1.0 : 1.0; };
    const Complex z(mag(), sgn() * mag());
    const Complex w(-mag(), sgn() * mag());
    const ProductCheck c = product_inequality(z, w);
    ++rep.samples;
    if (c.holds) ++rep.passed;
    if (c.margin < rep.min_margin) {
      rep.min_margin = c.margin;
      rep.worst_z = z;
      rep.worst_w = w;
    }
  }
  return rep;
}

}  // namespace viscomem
