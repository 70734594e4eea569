#pragma once

// Laplace-domain checks: transforms of loads, the coercivity constant K(s),
// the line-L2 distance between dynamic and stationary transforms, Plancherel.

#include "viscomem/cubic_bounds.hpp"
#include "viscomem/elliptic.hpp"
#include "viscomem/fem_core.hpp"
#include "viscomem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace viscomem {

/// Symmetric samples s2 = k * ds2, |k| <= k_max, on the line Re(s) = s1.
struct LineGrid {
  Real s1 = 1.0;
  Real ds2 = 0.25;
  Index k_max = 400;

  void validate() const {
    VISCOMEM_REQUIRE(s1 > 0.0, InvalidInput, "LineGrid: s1 must be > 0");
    VISCOMEM_REQUIRE(ds2 > 0.0, InvalidInput, "LineGrid: ds2 must be > 0");
    VISCOMEM_REQUIRE(k_max >= 1, InvalidInput, "LineGrid: k_max must be >= 1");
  }
  [[nodiscard]] Real radius() const { return static_cast<Real>(k_max) * ds2; }
  [[nodiscard]] Real s2(Index k) const { return static_cast<Real>(k) * ds2; }
  /// Trapezoid weight of sample k in [-k_max, k_max].
  [[nodiscard]] Real weight(Index k) const {
    return (k == -k_max || k == k_max) ? 0.5 * ds2 : ds2;
  }
};

/// Laplace transform of a scalar function on [0, T] extended by zero.
inline Complex laplace_transform(const std::function<Real(Real)>& h, Real T, Complex s) {
  VISCOMEM_REQUIRE(s.real() > 0.0, InvalidInput, "laplace_load: Re(s) must be > 0");
  VISCOMEM_REQUIRE(T > 0.0, InvalidInput, "laplace_load: T must be > 0");
  // about one panel per half oscillation of exp(-i s2 t)
  const auto panels = static_cast<std::size_t>(std::ceil(T * (std::abs(s) + 1.0) / M_PI)) + 4;
  Complex acc = 0.0;
  composite_gauss<10>(0.0, T, panels, [&](Real t, Real w) { acc += w * std::exp(-s * t) * h(t); });
  return acc;
}

/// Laplace transform of a vector-valued load on [0, T].
inline ComplexVector laplace_load(const std::function<Vector(Real)>& h, Real T,
                                  const ComplexFrequency& freq) {
  const Complex s = freq.s;
  VISCOMEM_REQUIRE(T > 0.0, InvalidInput, "laplace_load: T must be > 0");
  const auto panels = static_cast<std::size_t>(std::ceil(T * (std::abs(s) + 1.0) / M_PI)) + 4;
  ComplexVector acc;
  composite_gauss<10>(0.0, T, panels, [&](Real t, Real w) {
    const Vector v = h(t);
    if (acc.size() == 0) acc = ComplexVector::Zero(v.size());
    acc += (w * std::exp(-s * t)) * v.cast<Complex>();
  });
  return acc;
}

/// Load phi(t) * profile with profile an interior dual vector.
struct SeparableLoad {
  std::function<Real(Real)> factor;
  Vector profile;
  Real T = 1.0;

  [[nodiscard]] Vector at(Real t) const { return factor(t) * profile; }
  [[nodiscard]] Complex transform(Complex s) const { return laplace_transform(factor, T, s); }
};

/// Constants of the frequency-domain coercivity estimate.
struct CoercivitySpec {
  Real beta = 1.0;
  Real c_A = 1.0, C_A = 1.0, c_B = 1.0, C_B = 1.0;
  Real C_P = 1.0;
  Real a0 = 0.0, b0 = 0.0, c0 = 0.0, c1 = 0.0;
  Real alpha = 0.0;
  Real gamma = std::numeric_limits<Real>::infinity();  // +inf: branch inactive
  int gamma_levels = 0;
  Index gamma_grid = 0;

  [[nodiscard]] CubicBox box() const { return CubicBox{beta, a0, b0, c0, c1}; }
  [[nodiscard]] Real box_upper() const { return 2.0 / (3.0 * beta * beta); }
  [[nodiscard]] Real radius() const { return std::sqrt(2.0 * (2.0 + c1) / (3.0 * beta * beta)); }
};

struct GammaEstimate {
  Real value = std::numeric_limits<Real>::infinity();
  bool empty_box = false;
  int levels = 0;
  Index grid = 0;  // points per dimension at the finest level
};

/// Lower estimate of
///   min |beta z^3 + z^2 + beta b z + a| / (a |beta z + 1|)
/// over Re z >= 0, |z| <= R, a0 <= a <= 2/(3 beta^2), b0 <= b <= 2/(3 beta^2),
/// c0 a <= b <= c1 a. For fixed (a, b) the quotient is analytic and zero-free on
/// the half disk, so its minimum modulus is attained on the boundary (imaginary
/// segment and arc); only the upper half is sampled by conjugate symmetry. The
/// grid is refined until the relative change is below `tol`, and the returned
/// value is the finest minimum minus the last change.
inline GammaEstimate estimate_gamma(const CoercivitySpec& spec, Real tol = 1e-3,
                                    Index start = 24, int max_levels = 5) {
  GammaEstimate out;
  const Real upper = spec.box_upper();
  if (spec.a0 > upper || spec.b0 > upper) {
    out.empty_box = true;
    return out;
  }
  const Real beta = spec.beta;
  const Real R = spec.radius();
  const auto grid_min = [&](Index n) {
    Real best = std::numeric_limits<Real>::infinity();
    std::vector<Complex> boundary;
    boundary.reserve(static_cast<std::size_t>(2 * n + 2));
    for (Index i = 0; i <= n; ++i) {
      boundary.emplace_back(0.0, R * static_cast<Real>(i) / static_cast<Real>(n));
    }
    for (Index i = 0; i <= n; ++i) {
      const Real phi = 0.5 * M_PI * static_cast<Real>(i) / static_cast<Real>(n);
      boundary.push_back(std::polar(R, phi));
    }
    for (Index ia = 0; ia <= n; ++ia) {
      const Real a = spec.a0 + (upper - spec.a0) * static_cast<Real>(ia) / static_cast<Real>(n);
      const Real lo = std::max(spec.b0, spec.c0 * a);
      const Real hi = std::min(upper, spec.c1 * a);
      if (lo > hi) continue;
      for (Index ib = 0; ib <= n; ++ib) {
        const Real b = lo + (hi - lo) * static_cast<Real>(ib) / static_cast<Real>(n);
        for (const Complex& z : boundary) {
          const Complex p = ((beta * z + 1.0) * z + beta * b) * z + a;
          best = std::min(best, std::abs(p) / (a * std::abs(beta * z + 1.0)));
        }
      }
    }
    return best;
  };
  Index n = start;
  Real coarse = grid_min(n);
  if (!std::isfinite(coarse)) {
    out.empty_box = true;
    return out;
  }
  out.levels = 1;
  for (int level = 1; level < max_levels; ++level) {
    n *= 2;
    const Real fine = grid_min(n);
    ++out.levels;
    const Real change = std::abs(fine - coarse);
    out.value = fine - change;
    out.grid = n;
    coarse = fine;
    if (change <= tol * std::abs(fine)) break;
  }
  return out;
}

/// Coercivity constants for an assembled problem with the discrete C_P.
inline CoercivitySpec make_coercivity_spec(const FemMatrices& mats, Real beta) {
  VISCOMEM_REQUIRE(beta > 0.0, InvalidInput, "CoercivitySpec: beta must be > 0");
  CoercivitySpec spec;
  spec.beta = beta;
  spec.c_A = mats.c_A;
  spec.C_A = mats.C_A;
  spec.c_B = mats.c_B;
  spec.C_B = mats.C_B;
  spec.C_P = poincare_constant(mats);
  spec.a0 = spec.c_A / (spec.C_P * spec.C_P);
  spec.b0 = (spec.c_A + spec.c_B) / (spec.C_P * spec.C_P);
  spec.c0 = 1.0 + spec.c_B / spec.C_A;
  spec.c1 = 1.0 + spec.C_B / spec.c_A;
  spec.alpha = alpha_bound(spec.box());
  const GammaEstimate g = estimate_gamma(spec);
  spec.gamma = g.value;
  spec.gamma_levels = g.levels;
  spec.gamma_grid = g.grid;
  return spec;
}

/// K(s) = min{1/2, alpha / (2 sqrt 3 |s (beta s + 1)|), gamma}.
inline Real K_of_s(const CoercivitySpec& spec, const ComplexFrequency& freq) {
  VISCOMEM_REQUIRE(spec.alpha > 0.0, InvalidInput, "K_of_s: alpha must be > 0");
  if (!(spec.gamma > 0.0)) {
    throw InvalidInput("K_of_s: gamma estimate " + std::to_string(spec.gamma) +
                       " is not positive (grid " + std::to_string(spec.gamma_grid) +
                       " points per dimension, " + std::to_string(spec.gamma_levels) +
                       " levels)");
  }
  const Complex s = freq.s;
  const Real branch = spec.alpha / (2.0 * std::sqrt(3.0) * std::abs(s * (spec.beta * s + 1.0)));
  return std::min({0.5, branch, spec.gamma});
}

/// <S_eps(s) psi, psi> for a complex interior vector.
inline Complex frequency_form(const FemMatrices& mats, Complex s, Real eps, Real beta,
                              const ComplexVector& psi) {
  const auto quad = [&](const SparseMatrix& A) {
    return std::real(psi.dot(A.cast<Complex>() * psi));
  };
  return eps * eps * s * s * quad(mats.mass) + quad(mats.stiff_A) + quad(mats.stiff_B) -
         quad(mats.stiff_B) / (beta * eps * s + 1.0);
}

struct CoercivityReport {
  std::size_t trials = 0;
  std::size_t passed = 0;
  Real K = 0.0;
  Real min_margin = std::numeric_limits<Real>::infinity();  // min |form| / rhs - 1
};

/// Checks |<S_eps(s) psi, psi>| >= c_A K(s) |e psi|^2 on random complex psi.
inline CoercivityReport verify_coercivity(const CoercivitySpec& spec, const FemMatrices& mats,
                                          const ComplexFrequency& s, Real eps, std::size_t trials,
                                          std::uint64_t seed) {
  VISCOMEM_REQUIRE(eps > 0.0 && eps < 1.0, InvalidInput,
                   "verify_coercivity: eps must lie in (0, 1)");
  CoercivityReport rep;
  rep.K = K_of_s(spec, s);
  std::normal_distribution<Real> normal(0.0, 1.0);
  const Index m = mats.interior_size();
  for (std::size_t j = 0; j < trials; ++j) {
    std::mt19937_64 rng(derive_seed(seed, j));
    ComplexVector psi(m);
    for (Index i = 0; i < m; ++i) psi[i] = Complex(normal(rng), normal(rng));
    const Real lhs = std::abs(frequency_form(mats, s.s, eps, spec.beta, psi));
    const Real rhs = spec.c_A * rep.K * std::real(psi.dot(mats.stiff_unit.cast<Complex>() * psi));
    ++rep.trials;
    if (lhs >= rhs) ++rep.passed;
    rep.min_margin = std::min(rep.min_margin, lhs / rhs - 1.0);
  }
  return rep;
}

/// Problem data for line integrals: operators, beta and a separable load.
struct LineProblem {
  const FemMatrices* mats = nullptr;
  Real beta = 1.0;
  SeparableLoad load;
};

struct LineSample {
  Real s2 = 0.0;
  Real norm_eps = 0.0;   // |v_eps(s)|_V
  Real norm_zero = 0.0;  // |v_0(s)|_V
  Real gap2 = 0.0;       // |v_eps(s) - v_0(s)|_V^2
};

struct LineDistance {
  Real value = 0.0;         // trapezoid over the grid
  Real half_line = 0.0;     // twice the s2 >= 0 half, minus the doubled s2 = 0 term
  Real tail_bound = 0.0;    // estimate of the contribution from |s2| > S
  Real load_tail = 0.0;     // tail of |h(s)|^2 from the Plancherel identity
  Real high_freq_constant = 0.0;
  Real stationary_constant = 0.0;
  std::vector<LineSample> samples;
};

namespace detail {

inline Real v_norm(const FemMatrices& mats, const ComplexVector& x) {
  const SparseMatrix V = mats.mass + mats.stiff_unit;
  return std::sqrt(std::max(0.0, std::real(x.dot(V.cast<Complex>() * x))));
}

/// Norm of K_A^{-1} from the dual H norm to V: largest generalized eigenvalue of
/// K_A^{-1} (M + K_1) K_A^{-1} relative to M^{-1}, computed densely.
inline Real stationary_norm(const FemMatrices& mats) {
  const DenseMatrix M = DenseMatrix(mats.mass);
  const DenseMatrix KA = DenseMatrix(mats.stiff_A);
  const DenseMatrix V = M + DenseMatrix(mats.stiff_unit);
  const Eigen::LLT<DenseMatrix> llt(M);
  const DenseMatrix L = llt.matrixL();
  // F = L y maps unit dual-H vectors; the V norm of K_A^{-1} L y
  const DenseMatrix X = KA.ldlt().solve(L);
  const DenseMatrix Q = X.transpose() * V * X;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(Q, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

template <class Fn>
void parallel_for(Index count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (Index i = 0; i < count; ++i) fn(i, 0u);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (Index i = w; i < count; i += workers) fn(i, w);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Asymptotic |h(s)|^2 mass beyond |s2| > S from the boundary values h(0), h(T):
/// the leading term (h(0) - exp(-sT) h(T)) / s of the transform.
inline Real asymptotic_tail(const std::function<Real(Real)>& h, Real T, Real s1, Real S) {
  const Real h0 = h(0.0);
  const Real hT = h(T);
  const Real decay = std::exp(-s1 * T);
  const Real smooth = (h0 * h0 + decay * decay * hT * hT) * 2.0 * (0.5 * M_PI - std::atan(S / s1)) / s1;
  const Real cross = 4.0 * h0 * hT * decay * std::sin(T * S) / (T * (s1 * s1 + S * S));
  return smooth + cross;
}

/// 2 pi int_0^T exp(-2 s1 t) h(t)^2 dt.
inline Real plancherel_time_side(const std::function<Real(Real)>& h, Real T, Real s1) {
  Real acc = 0.0;
  const auto panels = static_cast<std::size_t>(std::ceil(4.0 * T * (1.0 + s1))) + 8;
  composite_gauss<10>(0.0, T, panels,
                      [&](Real t, Real w) { acc += w * std::exp(-2.0 * s1 * t) * h(t) * h(t); });
  return 2.0 * M_PI * acc;
}

/// Trapezoid over the line grid of |v_eps(s) - v_0(s)|_V^2 with v_eps solving
/// the frequency system and v_0 the stationary one, both for the transformed
/// load. The tail beyond the grid is bounded by 2 (C_0^2 + C_eps(S)^2) times the
/// load tail, where C_0 = |K_A^{-1}| and C_eps(S) = 2 sqrt(1 + L_1) / (eps S)^2
/// for (eps S)^2 >= 2 L_2, with L_1, L_2 element bounds on the largest
/// eigenvalues of K_1 and K_{A+2B} relative to M.
inline LineDistance line_distance(Real eps, const LineGrid& line, const LineProblem& prob,
                                  unsigned workers = 1) {
  line.validate();
  VISCOMEM_REQUIRE(eps > 0.0, InvalidInput, "line_distance: eps must be > 0");
  VISCOMEM_REQUIRE(prob.mats != nullptr, InvalidInput, "line_distance: missing operators");
  const FemMatrices& mats = *prob.mats;
  const StationarySolver stationary(mats);
  const DualNorms duals(mats);
  const Real load_norm2 = std::pow(duals.h_norm(prob.load.profile), 2);

  const Index count = 2 * line.k_max + 1;
  std::vector<LineSample> samples(static_cast<std::size_t>(count));
  std::vector<Real> load2(static_cast<std::size_t>(count));
  std::vector<ComplexSolver> solvers;
  const unsigned nw = std::max(1u, workers);
  solvers.reserve(nw);
  for (unsigned w = 0; w < nw; ++w) solvers.emplace_back(mats, prob.beta);
  detail::parallel_for(count, nw, [&](Index i, unsigned w) {
    const Index k = i - line.k_max;
    const ComplexFrequency s(line.s1, line.s2(k));
    const Complex hs = prob.load.transform(s.s);
    const ComplexVector rhs = hs * prob.load.profile.cast<Complex>();
    const ComplexVector ve = solvers[w].solve(s, eps, rhs);
    const ComplexVector v0 = stationary.solve_interior(rhs);
    LineSample& out = samples[static_cast<std::size_t>(i)];
    out.s2 = line.s2(k);
    out.norm_eps = detail::v_norm(mats, ve);
    out.norm_zero = detail::v_norm(mats, v0);
    out.gap2 = std::pow(detail::v_norm(mats, ComplexVector(ve - v0)), 2);
    load2[static_cast<std::size_t>(i)] = std::norm(hs) * load_norm2;
  });

  LineDistance res;
  Real load_grid = 0.0;
  Real half = 0.0;
  for (Index i = 0; i < count; ++i) {
    const Index k = i - line.k_max;
    const Real w = line.weight(k);
    res.value += w * samples[static_cast<std::size_t>(i)].gap2;
    load_grid += w * load2[static_cast<std::size_t>(i)];
    if (k > 0) half += 2.0 * w * samples[static_cast<std::size_t>(i)].gap2;
    if (k == 0) half += w * samples[static_cast<std::size_t>(i)].gap2;
  }
  res.half_line = half;
  res.samples = std::move(samples);

  const Real S = line.radius();
  const Real total = plancherel_time_side(prob.load.factor, prob.load.T, line.s1) * load_norm2;
  res.load_tail = std::max({0.0, total - load_grid,
                            asymptotic_tail(prob.load.factor, prob.load.T, line.s1, S) * load_norm2});
  const Real lam1 = max_eigenvalue_bound(mats, mats.element_length);
  const Real lam2 = max_eigenvalue_bound(mats, Vector(mats.weight_A + 2.0 * mats.weight_B));
  res.stationary_constant = detail::stationary_norm(mats);
  if (eps * eps * S * S >= 2.0 * lam2) {
    res.high_freq_constant = 2.0 * std::sqrt(1.0 + lam1) / (eps * eps * S * S);
    res.tail_bound = 2.0 *
                     (res.stationary_constant * res.stationary_constant +
                      res.high_freq_constant * res.high_freq_constant) *
                     res.load_tail;
  } else {
    res.high_freq_constant = std::numeric_limits<Real>::infinity();
    res.tail_bound = res.load_tail > 0.0 ? std::numeric_limits<Real>::infinity() : 0.0;
  }
  if (res.tail_bound > 0.1 * res.value) {
    throw InvalidInput("line_distance: truncation tail bound " + std::to_string(res.tail_bound) +
                       " exceeds 10% of the integral " + std::to_string(res.value) +
                       " (eps = " + std::to_string(eps) + ", S = " + std::to_string(S) +
                       "); enlarge the line grid");
  }
  return res;
}

struct PlancherelReport {
  Real frequency_side = 0.0;  // grid trapezoid plus asymptotic tail
  Real time_side = 0.0;
  Real tail = 0.0;
  Real relative_gap = 0.0;
};

/// Compares int |h(s1 + i s2)|^2 ds2 with 2 pi int exp(-2 s1 t) h(t)^2 dt for a
/// scalar h on [0, T]; vector loads with a fixed profile scale both sides alike.
inline PlancherelReport plancherel_check(const std::function<Real(Real)>& h, Real T,
                                         const LineGrid& line) {
  line.validate();
  PlancherelReport rep;
  rep.time_side = plancherel_time_side(h, T, line.s1);
  Real grid = 0.0;
  for (Index k = -line.k_max; k <= line.k_max; ++k) {
    grid += line.weight(k) * std::norm(laplace_transform(h, T, Complex(line.s1, line.s2(k))));
  }
  rep.tail = asymptotic_tail(h, T, line.s1, line.radius());
  rep.frequency_side = grid + rep.tail;
  if (rep.time_side == 0.0) {
    rep.relative_gap = rep.frequency_side == 0.0 ? 0.0 : std::numeric_limits<Real>::infinity();
  } else {
    rep.relative_gap = std::abs(rep.frequency_side - rep.time_side) / rep.time_side;
  }
  return rep;
}

/// Inverse transform v(t) = (1/2 pi) int exp(s t) v(s) ds2 on a problem with a
/// single interior node, by the trapezoid on the line grid. Diagnostic only:
/// the truncated integral converges slowly.
inline Real bromwich_single_mode(const FemMatrices& mats, Real eps, Real beta,
                                 const SeparableLoad& load, const LineGrid& line, Real t) {
  VISCOMEM_REQUIRE(mats.interior_size() == 1, InvalidInput,
                   "bromwich_single_mode: requires exactly one interior node");
  line.validate();
  ComplexSolver solver(mats, beta);
  Complex acc = 0.0;
  for (Index k = -line.k_max; k <= line.k_max; ++k) {
    const ComplexFrequency s(line.s1, line.s2(k));
    ComplexVector rhs(1);
    rhs[0] = load.transform(s.s) * load.profile[0];
    acc += line.weight(k) * std::exp(s.s * t) * solver.solve(s, eps, rhs)[0];
  }
  return std::real(acc) / (2.0 * M_PI);
}

}  // namespace viscomem
