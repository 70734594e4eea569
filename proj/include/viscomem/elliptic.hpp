#pragma once

// Stationary solves: the real elliptic problem with Dirichlet lift, and the
// complex frequency-domain system.

#include "viscomem/fem_core.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

namespace viscomem {

/// Stationary problem -div(a u') = load(t), u = z(t) on the boundary.
/// `load(t)` returns the interior dual vector; `lift(t)` returns full nodal
/// values whose boundary entries are the Dirichlet data (may be empty).
struct EllipticProblem {
  const FemMatrices* mats = nullptr;
  std::function<Vector(Real)> load;
  std::function<Vector(Real)> lift;
};

/// Reusable factorization of the interior elasticity block.
class StationarySolver {
public:
  explicit StationarySolver(const FemMatrices& mats) : mats_(&mats) {
    ldlt_.compute(mats.stiff_A);
    VISCOMEM_REQUIRE(ldlt_.info() == Eigen::Success, SolverFailure,
                     "solve_stationary: elasticity operator is singular (coercivity violated)");
  }

  /// Interior solution of K_A v = rhs.
  [[nodiscard]] Vector solve_interior(const Vector& rhs) const {
    VISCOMEM_REQUIRE(rhs.size() == mats_->interior_size(), InvalidInput,
                     "solve_stationary: load size does not match the constrained space");
    Vector v = ldlt_.solve(rhs);
    VISCOMEM_REQUIRE(ldlt_.info() == Eigen::Success && v.allFinite(), SolverFailure,
                     "solve_stationary: back-substitution failed");
    return v;
  }

  [[nodiscard]] ComplexVector solve_interior(const ComplexVector& rhs) const {
    const Vector re = solve_interior(Vector(rhs.real()));
    const Vector im = solve_interior(Vector(rhs.imag()));
    ComplexVector out(re.size());
    out.real() = re;
    out.imag() = im;
    return out;
  }

  /// Full nodal solution u = z + v with K_A v = load - (K_A z) restricted to the interior.
  [[nodiscard]] NodalField solve(const Vector& load, const Vector& lift) const {
    const Index n = mats_->node_count();
    NodalField u;
    if (lift.size() == 0) {
      u = embed(solve_interior(load));
      return u;
    }
    VISCOMEM_REQUIRE(lift.size() == n, InvalidInput,
                     "solve_stationary: lift size does not match node count");
    const Vector kz = mats_->stiff_A_full * lift;
    const Vector v = solve_interior(Vector(load - kz.segment(1, n - 2)));
    u.values = lift;
    u.values.segment(1, n - 2) += v;
    u.homogeneous = false;
    return u;
  }

private:
  const FemMatrices* mats_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

inline NodalField solve_stationary(const EllipticProblem& prob, Real t) {
  VISCOMEM_REQUIRE(prob.mats != nullptr && prob.load, InvalidInput,
                   "solve_stationary: problem has no operators or load");
  const StationarySolver solver(*prob.mats);
  return solver.solve(prob.load(t), prob.lift ? prob.lift(t) : Vector());
}

/// Stationary solutions at every grid time, sharing one factorization.
inline std::vector<NodalField> solve_stationary_trajectory(const EllipticProblem& prob,
                                                           const TimeGrid& grid) {
  grid.validate();
  VISCOMEM_REQUIRE(prob.mats != nullptr && prob.load, InvalidInput,
                   "solve_stationary_trajectory: problem has no operators or load");
  const StationarySolver solver(*prob.mats);
  std::vector<NodalField> out;
  out.reserve(static_cast<std::size_t>(grid.point_count()));
  for (Index k = 0; k < grid.point_count(); ++k) {
    const Real t = grid.time(k);
    out.push_back(solver.solve(prob.load(t), prob.lift ? prob.lift(t) : Vector()));
  }
  return out;
}

/// Laplace variable with positive real part.
struct ComplexFrequency {
  Complex s;

  explicit ComplexFrequency(Complex value) : s(value) {
    VISCOMEM_REQUIRE(value.real() > 0.0, InvalidInput,
                     "ComplexFrequency: real part must be > 0");
  }
  ComplexFrequency(Real re, Real im) : ComplexFrequency(Complex(re, im)) {}
};

/// Interior matrix eps^2 s^2 M + K_{A+B} - (beta eps s + 1)^{-1} K_B.
inline ComplexSparseMatrix frequency_operator(const FemMatrices& mats, Complex s, Real eps,
                                              Real beta) {
  const Complex memory = 1.0 / (beta * eps * s + 1.0);
  const ComplexSparseMatrix A = (eps * eps * s * s) * mats.mass.cast<Complex>() +
                                mats.stiff_A.cast<Complex>() +
                                (1.0 - memory) * mats.stiff_B.cast<Complex>();
  return A;
}

/// Solver for the frequency-domain system with one complex LU per (s, eps).
/// Not thread-safe; use one instance per run or worker.
class ComplexSolver {
public:
  ComplexSolver(const FemMatrices& mats, Real beta) : mats_(&mats), beta_(beta) {
    VISCOMEM_REQUIRE(beta > 0.0, InvalidInput, "solve_complex: beta must be > 0");
  }

  ComplexVector solve(const ComplexFrequency& freq, Real eps, const ComplexVector& rhs) {
    VISCOMEM_REQUIRE(eps > 0.0, InvalidInput, "solve_complex: eps must be > 0");
    VISCOMEM_REQUIRE(rhs.size() == mats_->interior_size(), InvalidInput,
                     "solve_complex: right-hand side size does not match the constrained space");
    if (rhs.squaredNorm() == 0.0) return ComplexVector::Zero(rhs.size());
    auto& lu = factor(freq.s, eps);
    ComplexVector x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
      std::ostringstream msg;
      msg << "solve_complex: linear solve failed at s = " << freq.s << ", eps = " << eps;
      throw SolverFailure(msg.str());
    }
    return x;
  }

  [[nodiscard]] std::size_t cache_size() const { return cache_.size(); }

private:
  using LU = Eigen::SparseLU<ComplexSparseMatrix, Eigen::COLAMDOrdering<int>>;

  LU& factor(Complex s, Real eps) {
    const auto key = std::make_tuple(s.real(), s.imag(), eps);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto lu = std::make_unique<LU>();
    ComplexSparseMatrix A = frequency_operator(*mats_, s, eps, beta_);
    A.makeCompressed();
    lu->compute(A);
    if (lu->info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "solve_complex: factorization failed at s = " << s << ", eps = " << eps;
      throw SolverFailure(msg.str());
    }
    return *cache_.emplace(key, std::move(lu)).first->second;
  }

  const FemMatrices* mats_;
  Real beta_;
  std::map<std::tuple<Real, Real, Real>, std::unique_ptr<LU>> cache_;
};

/// One-shot frequency-domain solve on the constrained space.
inline ComplexNodalField solve_complex(const FemMatrices& mats, const ComplexFrequency& s,
                                       Real eps, Real beta, const ComplexNodalField& rhs) {
  VISCOMEM_REQUIRE(rhs.values.size() == mats.node_count(), InvalidInput,
                   "solve_complex: right-hand side must be a full nodal vector");
  ComplexSolver solver(mats, beta);
  return embed(solver.solve(s, eps, restrict_interior(rhs)));
}

}  // namespace viscomem
