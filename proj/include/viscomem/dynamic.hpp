#pragma once

// Time integration of the rescaled viscoelastic system with exponential memory.
//
// With v = u - z on the interior nodes and the per-element internal variable w,
//   eps^2 M v'' + K_A v + G^T D_B (G v - w) = h + l,   beta eps w' = G v - w,
// advanced by the implicit midpoint rule. The memory of the lift z is carried
// by a second internal variable Z obeying the same recursion.

#include "viscomem/elliptic.hpp"
#include "viscomem/fem_core.hpp"
#include "viscomem/quadrature.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace viscomem {

enum class DampingLaw { memory, kelvin_voigt, undamped };

inline std::string to_string(DampingLaw law) {
  switch (law) {
    case DampingLaw::memory: return "memory";
    case DampingLaw::kelvin_voigt: return "kelvin_voigt";
    case DampingLaw::undamped: return "undamped";
  }
  return "unknown";
}

inline DampingLaw parse_damping_law(const std::string& name) {
  if (name == "memory") return DampingLaw::memory;
  if (name == "kelvin_voigt") return DampingLaw::kelvin_voigt;
  if (name == "undamped") return DampingLaw::undamped;
  throw InvalidInput("unknown damping law '" + name + "'");
}

/// Vector-valued function of time with optional analytic derivatives. Missing
/// derivatives fall back to fourth-order central differences.
struct Signal {
  std::function<Vector(Real)> value;
  std::function<Vector(Real)> rate;
  std::function<Vector(Real)> accel;

  [[nodiscard]] explicit operator bool() const { return static_cast<bool>(value); }

  [[nodiscard]] Vector at(Real t) const { return value(t); }

  [[nodiscard]] Vector d1(Real t) const {
    if (rate) return rate(t);
    constexpr Real h = 1e-3;
    return (value(t - 2 * h) - 8.0 * value(t - h) + 8.0 * value(t + h) - value(t + 2 * h)) /
           (12.0 * h);
  }

  [[nodiscard]] Vector d2(Real t) const {
    if (accel) return accel(t);
    if (rate) {
      constexpr Real h = 1e-3;
      return (rate(t - 2 * h) - 8.0 * rate(t - h) + 8.0 * rate(t + h) - rate(t + 2 * h)) /
             (12.0 * h);
    }
    constexpr Real h = 5e-3;
    return (-value(t - 2 * h) + 16.0 * value(t - h) - 30.0 * value(t) + 16.0 * value(t + h) -
            value(t + 2 * h)) /
           (12.0 * h * h);
  }
};

/// Initial data after reduction of the history to t = 0. `u0`, `u1` are full
/// nodal vectors; `g0` is the interior dual vector of the history memory force.
struct ReducedData {
  Vector u0;
  Vector u1;
  Vector g0;
  Real beta_eps = 1.0;

  /// History memory force p(t) = exp(-t / (beta eps)) g0.
  [[nodiscard]] Vector p(Real t) const { return std::exp(-t / beta_eps) * g0; }
  [[nodiscard]] Vector p_dot(Real t) const { return (-1.0 / beta_eps) * p(t); }

  static ReducedData at_rest(const FemMatrices& mats, Real beta_eps) {
    return {Vector::Zero(mats.node_count()), Vector::Zero(mats.node_count()),
            Vector::Zero(mats.interior_size()), beta_eps};
  }
};

/// Data of the dynamic problem. Loads `f` (H-valued) and `g` (V0'-valued) are
/// interior dual vectors; `z` is a full nodal lift of the boundary datum;
/// `history` is u_in(tau) for tau <= 0 as full nodal values.
struct ProblemData {
  Real eps = 1.0;
  Real beta = 1.0;
  Real T = 1.0;
  DampingLaw law = DampingLaw::memory;
  Signal f;
  Signal g;
  Signal z;
  std::function<Vector(Real)> history;
  std::function<Vector(Real)> history_rate;
  std::optional<ReducedData> reduced;

  void validate() const {
    VISCOMEM_REQUIRE(eps > 0.0 && std::isfinite(eps), InvalidInput, "ProblemData: eps must be > 0");
    VISCOMEM_REQUIRE(beta > 0.0 && std::isfinite(beta), InvalidInput,
                     "ProblemData: beta must be > 0");
    VISCOMEM_REQUIRE(T > 0.0 && std::isfinite(T), InvalidInput, "ProblemData: T must be > 0");
  }
};

/// Options for the history quadrature.
struct HistoryQuadrature {
  Real truncation = 1e-14;  // kernel value at the truncation point
  Real tolerance = 1e-10;   // relative change between refinement levels
  Real fd_step = 1e-3;      // step of the one-sided difference for u_in'(0)
  int max_levels = 12;
};

/// u0 = u_in(0), u1 = u_in'(0), g0 = -(beta eps)^{-1} int exp(tau / beta eps) K_B u_in(tau) dtau.
inline ReducedData reduce_history(const ProblemData& data, const FemMatrices& mats,
                                  const HistoryQuadrature& opt = {}) {
  data.validate();
  const Real be = data.beta * data.eps;
  if (data.reduced) {
    ReducedData r = *data.reduced;
    r.beta_eps = be;
    return r;
  }
  VISCOMEM_REQUIRE(static_cast<bool>(data.history), InvalidInput,
                   "reduce_history: neither a history nor reduced initial data was supplied");
  const Index n = mats.node_count();
  ReducedData out;
  out.beta_eps = be;
  out.u0 = data.history(0.0);
  VISCOMEM_REQUIRE(out.u0.size() == n && out.u0.allFinite(), InvalidInput,
                   "reduce_history: history is not defined at 0");
  if (data.history_rate) {
    out.u1 = data.history_rate(0.0);
  } else {
    const Real h = opt.fd_step;
    out.u1 = (25.0 * out.u0 - 48.0 * data.history(-h) + 36.0 * data.history(-2 * h) -
              16.0 * data.history(-3 * h) + 3.0 * data.history(-4 * h)) /
             (12.0 * h);
  }
  VISCOMEM_REQUIRE(out.u1.size() == n && out.u1.allFinite(), InvalidInput,
                   "reduce_history: history derivative at 0 is not finite");

  // tau = beta eps s maps the kernel to exp(s) on (-inf, 0]
  const Real s_star = std::log(opt.truncation);
  const auto integrate_level = [&](std::size_t panels, Real& v_weighted) {
    Vector acc = Vector::Zero(n);
    v_weighted = 0.0;
    composite_gauss<8>(s_star, 0.0, panels, [&](Real s, Real w) {
      const Vector u = data.history(be * s);
      const Real kw = w * std::exp(s);
      acc += kw * u;
      v_weighted += kw * std::sqrt(std::max(0.0, u.dot(mats.mass_full * u) +
                                                     u.dot(mats.stiff_unit_full * u)));
    });
    return acc;
  };
  std::size_t panels = static_cast<std::size_t>(std::ceil(-s_star));
  Real v_prev = 0.0;
  Vector prev = integrate_level(panels, v_prev);
  bool converged = false;
  for (int level = 0; level < opt.max_levels; ++level) {
    panels *= 2;
    Real v_next = 0.0;
    Vector next = integrate_level(panels, v_next);
    VISCOMEM_REQUIRE(next.allFinite() && std::isfinite(v_next), InvalidInput,
                     "reduce_history: history is not integrable against the kernel");
    const Real scale = std::max(next.norm(), 1e-300);
    const Real change = (next - prev).norm();
    prev = std::move(next);
    v_prev = v_next;
    if (change <= opt.tolerance * scale || prev.norm() == 0.0) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SolverFailure("reduce_history: history quadrature did not converge");
  }
  const Vector kb = mats.stiff_B_full * prev;
  out.g0 = -kb.segment(1, n - 2);
  return out;
}

/// Loads of the homogeneous problem after subtracting the lift z:
///   h = phi - eps^2 (M z'')_I,
///   l = gamma - (K z)_I + G_I^T D_B Z,   beta eps Z' = G z - Z,
/// with gamma = g - p for the memory law, K = K_{A+B} (memory), K_A plus the
/// viscous lift term for Kelvin-Voigt, K_A when undamped.
struct LiftedSystem {
  Real eps = 1.0;
  Real beta = 1.0;
  DampingLaw law = DampingLaw::memory;
  Vector v0, v1;                 // interior initial data
  SparseMatrix coupling;         // G_I^T D_B, interior x elements
  std::function<Vector(Real)> h;
  std::function<Vector(Real)> ell_base;
  std::function<Vector(Real)> ell_base_rate;
  std::function<Vector(Real)> lift_strain;  // G z per element; empty if no lift

  [[nodiscard]] Real beta_eps() const { return beta * eps; }
  [[nodiscard]] bool has_lift_memory() const {
    return law == DampingLaw::memory && static_cast<bool>(lift_strain);
  }
  [[nodiscard]] Vector ell(Real t, const Vector& Z) const {
    Vector out = ell_base(t);
    if (has_lift_memory()) out += coupling * Z;
    return out;
  }
  [[nodiscard]] Vector ell_rate(Real t, const Vector& Z) const {
    Vector out = ell_base_rate(t);
    if (has_lift_memory()) out += coupling * ((lift_strain(t) - Z) / beta_eps());
    return out;
  }
};

inline LiftedSystem boundary_lift(const ProblemData& data, const ReducedData& reduced,
                                  const FemMatrices& mats) {
  data.validate();
  const Index n = mats.node_count();
  const Index m = mats.interior_size();
  LiftedSystem sys;
  sys.eps = data.eps;
  sys.beta = data.beta;
  sys.law = data.law;
  sys.coupling = SparseMatrix(mats.strain.transpose() * mats.weight_B.asDiagonal());

  const Vector z0 = data.z ? data.z.at(0.0) : Vector::Zero(n);
  const Vector zd0 = data.z ? data.z.d1(0.0) : Vector::Zero(n);
  VISCOMEM_REQUIRE(reduced.u0.size() == n && reduced.u1.size() == n && z0.size() == n,
                   InvalidInput, "boundary_lift: initial data size does not match node count");
  const Vector d0 = reduced.u0 - z0;
  const Real tol = 1e-10 * (1.0 + reduced.u0.cwiseAbs().maxCoeff());
  VISCOMEM_REQUIRE(std::abs(d0[0]) <= tol && std::abs(d0[n - 1]) <= tol, InvalidInput,
                   "boundary_lift: u0 - z(0) does not vanish on the boundary");
  sys.v0 = d0.segment(1, m);
  sys.v1 = (reduced.u1 - zd0).segment(1, m);

  const Real eps = data.eps;
  const Signal f = data.f;
  const Signal g = data.g;
  const Signal z = data.z;
  const SparseMatrix mass_rows = mats.mass_full.middleRows(1, m);
  const SparseMatrix a_rows = mats.stiff_A_full.middleRows(1, m);
  const SparseMatrix b_rows = mats.stiff_B_full.middleRows(1, m);
  const bool memory = data.law == DampingLaw::memory;
  const bool kv = data.law == DampingLaw::kelvin_voigt;
  const ReducedData red = reduced;

  sys.h = [=](Real t) -> Vector {
    Vector out = f ? f.at(t) : Vector::Zero(m);
    if (z) out -= eps * eps * (mass_rows * z.d2(t));
    return out;
  };
  sys.ell_base = [=](Real t) -> Vector {
    Vector out = g ? g.at(t) : Vector::Zero(m);
    if (memory) out -= red.p(t);
    if (z) {
      const Vector zt = z.at(t);
      out -= a_rows * zt;
      if (memory) out -= b_rows * zt;
      if (kv) out -= eps * (b_rows * z.d1(t));
    }
    return out;
  };
  sys.ell_base_rate = [=](Real t) -> Vector {
    Vector out = g ? g.d1(t) : Vector::Zero(m);
    if (memory) out -= red.p_dot(t);
    if (z) {
      const Vector zd = z.d1(t);
      out -= a_rows * zd;
      if (memory) out -= b_rows * zd;
      if (kv) out -= eps * (b_rows * z.d2(t));
    }
    return out;
  };
  if (z) {
    const SparseMatrix G = mats.strain_full;
    sys.lift_strain = [=](Real t) -> Vector { return G * z.at(t); };
  }
  return sys;
}

/// One implicit-midpoint step of beta eps w' = e - w for prescribed strains
/// at the two ends of the step.
inline Vector advance_internal_variable(const Vector& w, const Vector& strain_now,
                                        const Vector& strain_next, Real dt, Real beta_eps) {
  const Real denom = beta_eps + 0.5 * dt;
  const Real r = (beta_eps - 0.5 * dt) / denom;
  const Real theta = dt / denom;
  return r * w + (0.5 * theta) * (strain_now + strain_next);
}

/// Discrete state: interior displacement v, velocity v_dot, internal variable w
/// (per element) and the lift memory Z (per element).
struct State {
  Real t = 0.0;
  Vector v;
  Vector v_dot;
  Vector w;
  Vector lift_memory;
};

/// Factorized implicit-midpoint stepper for a fixed step size.
class Stepper {
public:
  Stepper(const FemMatrices& mats, Real eps, Real beta, DampingLaw law, Real dt)
      : mats_(&mats), eps_(eps), beta_eps_(beta * eps), law_(law), dt_(dt) {
    VISCOMEM_REQUIRE(dt > 0.0 && std::isfinite(dt), InvalidInput, "step: dt must be > 0");
    VISCOMEM_REQUIRE(eps > 0.0 && beta > 0.0, InvalidInput, "step: eps and beta must be > 0");
    theta_ = dt / (beta_eps_ + 0.5 * dt);
    r_ = (beta_eps_ - 0.5 * dt) / (beta_eps_ + 0.5 * dt);
    mass_coef_ = 4.0 * eps * eps / (dt * dt);
    SparseMatrix S = mass_coef_ * mats.mass + mats.stiff_A;
    if (law == DampingLaw::memory) S += (1.0 - 0.5 * theta_) * mats.stiff_B;
    if (law == DampingLaw::kelvin_voigt) S += (2.0 * eps / dt) * mats.stiff_B;
    ldlt_.compute(S);
    VISCOMEM_REQUIRE(ldlt_.info() == Eigen::Success, SolverFailure,
                     "step: factorization of the step operator failed");
    coupling_ = SparseMatrix(mats.strain.transpose() * mats.weight_B.asDiagonal());
  }

  [[nodiscard]] Real dt() const { return dt_; }
  [[nodiscard]] Real r() const { return r_; }
  [[nodiscard]] Real theta() const { return theta_; }

  /// Advances (v, v_dot, w) with the step-averaged force `force_mean`.
  /// The lift memory is not touched.
  void advance(const State& s, const Vector& force_mean, State& out) const {
    Vector rhs = mass_coef_ * (mats_->mass * s.v) +
                 (2.0 * eps_ * eps_ / dt_) * (mats_->mass * s.v_dot) + force_mean;
    if (law_ == DampingLaw::memory) rhs += (1.0 - 0.5 * theta_) * (coupling_ * s.w);
    if (law_ == DampingLaw::kelvin_voigt) rhs += (2.0 * eps_ / dt_) * (mats_->stiff_B * s.v);
    const Vector vbar = ldlt_.solve(rhs);
    VISCOMEM_REQUIRE(ldlt_.info() == Eigen::Success && vbar.allFinite(), SolverFailure,
                     "step: linear solve failed at t = " + std::to_string(s.t));
    out.t = s.t + dt_;
    out.v = 2.0 * vbar - s.v;
    out.v_dot = (2.0 / dt_) * (out.v - s.v) - s.v_dot;
    out.w = r_ * s.w + theta_ * (mats_->strain * vbar);
  }

private:
  const FemMatrices* mats_;
  Real eps_, beta_eps_;
  DampingLaw law_;
  Real dt_;
  Real theta_ = 0.0, r_ = 0.0, mass_coef_ = 0.0;
  SparseMatrix coupling_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

/// Initial state of the lifted system.
inline State initial_state(const LiftedSystem& sys, const FemMatrices& mats) {
  State s;
  s.t = 0.0;
  s.v = sys.v0;
  s.v_dot = sys.v1;
  s.w = Vector::Zero(mats.element_count());
  s.lift_memory = Vector::Zero(mats.element_count());
  return s;
}

/// Single step including the lift memory update. Factorizes on every call;
/// integrate() reuses one factorization.
inline State step(const State& state, const FemMatrices& mats, const LiftedSystem& sys, Real dt) {
  const Stepper stepper(mats, sys.eps, sys.beta, sys.law, dt);
  State next;
  const Real t1 = state.t + dt;
  next.lift_memory = state.lift_memory;
  if (sys.has_lift_memory()) {
    next.lift_memory = advance_internal_variable(state.lift_memory, sys.lift_strain(state.t),
                                                 sys.lift_strain(t1), dt, sys.beta_eps());
  }
  const Vector force = 0.5 * (sys.h(state.t) + sys.h(t1) + sys.ell(state.t, state.lift_memory) +
                              sys.ell(t1, next.lift_memory));
  stepper.advance(state, force, next);
  return next;
}

/// Per-grid-point terms of the energy-dissipation balance.
struct EnergyLedger {
  std::vector<Real> t;
  std::vector<Real> kinetic;      // eps^2/2 |v'|^2
  std::vector<Real> elastic;      // 1/2 (A e v, e v)
  std::vector<Real> memory;       // 1/2 (B (e v - w), e v - w)
  std::vector<Real> dissipation;  // cumulative
  std::vector<Real> work;         // cumulative work W(t)
  std::vector<Real> residual;     // |LHS - RHS|
  Real initial_energy = 0.0;

  [[nodiscard]] std::size_t size() const { return t.size(); }
  [[nodiscard]] Real defect(std::size_t k) const {
    return kinetic[k] + elastic[k] + memory[k] + dissipation[k] - initial_energy - work[k];
  }
};

/// max_t |balance defect| / (1 + max energy), recomputed from the ledger columns.
inline Real energy_residual(const EnergyLedger& ledger) {
  Real worst = 0.0;
  Real scale = std::abs(ledger.initial_energy);
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    worst = std::max(worst, std::abs(ledger.defect(k)));
    scale = std::max(scale, ledger.kinetic[k] + ledger.elastic[k] + ledger.memory[k]);
  }
  return worst / (1.0 + scale);
}

/// Discrete solution on the grid. `u` and `u_dot` are full nodal values with
/// the lift re-added; the load series are the lifted loads at grid times.
struct Trajectory {
  std::vector<State> states;
  std::vector<Vector> u;
  std::vector<Vector> u_dot;
  std::vector<Vector> h;
  std::vector<Vector> ell;
  std::vector<Vector> ell_rate;
  Vector v1;  // initial velocity of the lifted problem

  [[nodiscard]] std::size_t size() const { return states.size(); }
};

struct IntegrationResult {
  Trajectory trajectory;
  EnergyLedger ledger;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_grid(const ProblemData& data, const TimeGrid& grid) {
  grid.validate();
  VISCOMEM_REQUIRE(std::abs(grid.T - data.T) <= 1e-12 * data.T, InvalidInput,
                   "integrate: grid end time does not match the problem end time");
}

inline std::vector<std::string> stiffness_warnings(const ProblemData& data, const TimeGrid& grid) {
  std::vector<std::string> w;
  if (data.eps < 1e-6 && grid.dt() > 0.25 * data.beta * data.eps) {
    w.push_back("eps = " + std::to_string(data.eps) +
                ": time step exceeds beta*eps/4, memory layer is under-resolved");
  }
  return w;
}

inline void fill_displacement(Trajectory& traj, const ProblemData& data, Index n) {
  for (const State& s : traj.states) {
    Vector u = Vector::Zero(n);
    Vector ud = Vector::Zero(n);
    u.segment(1, n - 2) = s.v;
    ud.segment(1, n - 2) = s.v_dot;
    if (data.z) {
      u += data.z.at(s.t);
      ud += data.z.d1(s.t);
    }
    traj.u.push_back(std::move(u));
    traj.u_dot.push_back(std::move(ud));
  }
}

}  // namespace detail

/// Full discrete solve with the energy ledger.
inline IntegrationResult integrate(const ProblemData& data, const FemMatrices& mats,
                                   const TimeGrid& grid) {
  data.validate();
  detail::check_grid(data, grid);
  const ReducedData reduced = reduce_history(data, mats);
  const LiftedSystem sys = boundary_lift(data, reduced, mats);
  const Real dt = grid.dt();
  const Stepper stepper(mats, data.eps, data.beta, data.law, dt);
  const Real eps2 = data.eps * data.eps;
  const Real be = data.beta * data.eps;

  IntegrationResult res;
  res.warnings = detail::stiffness_warnings(data, grid);
  Trajectory& traj = res.trajectory;
  EnergyLedger& led = res.ledger;
  traj.v1 = sys.v1;
  const auto npts = static_cast<std::size_t>(grid.point_count());
  traj.states.reserve(npts);

  const Vector& DB = mats.weight_B;
  const auto record_energy = [&](const State& s) {
    led.t.push_back(s.t);
    led.kinetic.push_back(0.5 * eps2 * s.v_dot.dot(mats.mass * s.v_dot));
    led.elastic.push_back(0.5 * s.v.dot(mats.stiff_A * s.v));
    if (data.law == DampingLaw::memory) {
      const Vector d = mats.strain * s.v - s.w;
      led.memory.push_back(0.5 * d.dot(DB.cwiseProduct(d)));
    } else {
      led.memory.push_back(0.0);
    }
  };

  State cur = initial_state(sys, mats);
  traj.states.push_back(cur);
  traj.h.push_back(sys.h(0.0));
  traj.ell.push_back(sys.ell(0.0, cur.lift_memory));
  traj.ell_rate.push_back(sys.ell_rate(0.0, cur.lift_memory));
  record_energy(cur);
  led.initial_energy = 0.5 * eps2 * sys.v1.dot(mats.mass * sys.v1) +
                       0.5 * sys.v0.dot((mats.stiff_A + mats.stiff_B) * sys.v0);
  if (data.law != DampingLaw::memory) {
    led.initial_energy = 0.5 * eps2 * sys.v1.dot(mats.mass * sys.v1) +
                         0.5 * sys.v0.dot(mats.stiff_A * sys.v0);
  }
  led.dissipation.push_back(0.0);
  led.work.push_back(0.0);
  led.residual.push_back(std::abs(led.defect(0)));

  Real dissipation = 0.0;
  Real work_flux = 0.0;
  const Vector ell0_v0 = traj.ell[0];
  const Real ell0_dot_v0 = ell0_v0.dot(sys.v0);
  for (Index k = 1; k < grid.point_count(); ++k) {
    const Real t1 = grid.time(k);
    State next;
    next.lift_memory = cur.lift_memory;
    if (sys.has_lift_memory()) {
      next.lift_memory = advance_internal_variable(cur.lift_memory, sys.lift_strain(cur.t),
                                                   sys.lift_strain(t1), dt, be);
    }
    Vector h1 = sys.h(t1);
    Vector l1 = sys.ell(t1, next.lift_memory);
    Vector lr1 = sys.ell_rate(t1, next.lift_memory);
    const auto prev = static_cast<std::size_t>(k - 1);
    const Vector h_mean = 0.5 * (traj.h[prev] + h1);
    stepper.advance(cur, h_mean + 0.5 * (traj.ell[prev] + l1), next);
    next.t = t1;

    const Vector p_mean = 0.5 * (cur.v_dot + next.v_dot);
    const Vector v_mean = 0.5 * (cur.v + next.v);
    if (data.law == DampingLaw::memory) {
      const Vector wd = (next.w - cur.w) / dt;
      dissipation += be * dt * wd.dot(DB.cwiseProduct(wd));
    } else if (data.law == DampingLaw::kelvin_voigt) {
      dissipation += data.eps * dt * p_mean.dot(mats.stiff_B * p_mean);
    }
    work_flux += dt * h_mean.dot(p_mean) - dt * (0.5 * (traj.ell_rate[prev] + lr1)).dot(v_mean);

    record_energy(next);
    led.dissipation.push_back(dissipation);
    led.work.push_back(work_flux + l1.dot(next.v) - ell0_dot_v0);
    led.residual.push_back(std::abs(led.defect(static_cast<std::size_t>(k))));

    traj.h.push_back(std::move(h1));
    traj.ell.push_back(std::move(l1));
    traj.ell_rate.push_back(std::move(lr1));
    traj.states.push_back(next);
    cur = std::move(next);
  }
  detail::fill_displacement(traj, data, mats.node_count());
  return res;
}

/// Maximum time-step count accepted by the O(N^2) reference solver.
inline constexpr Index kOracleMaxSteps = 20000;

/// Reference solver for the memory law that keeps the memory term as a
/// discrete convolution (trapezoidal convolution quadrature) of the full
/// strain history instead of an internal variable. The constant part of the
/// strain is convolved with the exact kernel mass 1 - exp(-t / (beta eps)).
inline Trajectory oracle_convolution(const ProblemData& data, const FemMatrices& mats,
                                     const TimeGrid& grid) {
  data.validate();
  detail::check_grid(data, grid);
  VISCOMEM_REQUIRE(data.law == DampingLaw::memory, InvalidInput,
                   "oracle_convolution: only the memory law has a convolution form");
  VISCOMEM_REQUIRE(grid.steps <= kOracleMaxSteps, InvalidInput,
                   "oracle_convolution: " + std::to_string(grid.steps) +
                       " steps exceed the instance-size guard of " +
                       std::to_string(kOracleMaxSteps));
  const ReducedData reduced = reduce_history(data, mats);
  const Index n = mats.node_count();
  const Index m = mats.interior_size();
  const Index ne = mats.element_count();
  const Real dt = grid.dt();
  const Real eps2 = data.eps * data.eps;
  const Real be = data.beta * data.eps;

  // generating function (1 + x) / ((1 + kappa) + (1 - kappa) x)
  const Real kappa = 2.0 * be / dt;
  const Real ratio = (kappa - 1.0) / (kappa + 1.0);
  std::vector<Real> omega(static_cast<std::size_t>(grid.steps) + 1);
  omega[0] = 1.0 / (1.0 + kappa);
  Real rp = 1.0;
  for (std::size_t j = 1; j < omega.size(); ++j) {
    omega[j] = (rp * ratio + rp) / (1.0 + kappa);
    rp *= ratio;
  }

  const SparseMatrix K = mats.stiff_A + mats.stiff_B;
  const SparseMatrix mass_rows = mats.mass_full.middleRows(1, m);
  const SparseMatrix k_rows =
      SparseMatrix(mats.stiff_A_full.middleRows(1, m)) + SparseMatrix(mats.stiff_B_full.middleRows(1, m));
  const SparseMatrix coupling = SparseMatrix(mats.strain.transpose() * mats.weight_B.asDiagonal());
  const SparseMatrix& Gi = mats.strain;
  const SparseMatrix& G = mats.strain_full;

  const auto zfull = [&](Real t) -> Vector { return data.z ? data.z.at(t) : Vector::Zero(n); };
  // all loads except the memory term, on the interior
  const auto explicit_load = [&](Real t) -> Vector {
    Vector out = data.f ? data.f.at(t) : Vector::Zero(m);
    if (data.g) out += data.g.at(t);
    out -= reduced.p(t);
    if (data.z) {
      out -= eps2 * (mass_rows * data.z.d2(t));
      out -= k_rows * data.z.at(t);
    }
    return out;
  };

  const Vector z0 = zfull(0.0);
  const Vector v0 = (reduced.u0 - z0).segment(1, m);
  const Vector v1 =
      (reduced.u1 - (data.z ? data.z.d1(0.0) : Vector::Zero(n))).segment(1, m);

  const Real mc = 4.0 * eps2 / (dt * dt);
  const SparseMatrix S = mc * mats.mass + K - omega[0] * mats.stiff_B;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(S);
  VISCOMEM_REQUIRE(ldlt.info() == Eigen::Success, SolverFailure,
                   "oracle_convolution: factorization failed");

  std::vector<Vector> strain;  // full strain minus its initial value
  strain.reserve(static_cast<std::size_t>(grid.point_count()));
  const Vector strain0 = Gi * v0 + G * z0;
  strain.push_back(Vector::Zero(ne));

  const auto memory_force = [&](Real t, const Vector& conv) -> Vector {
    return coupling * (conv + (1.0 - std::exp(-t / be)) * strain0);
  };

  Trajectory traj;
  traj.v1 = v1;
  State cur;
  cur.t = 0.0;
  cur.v = v0;
  cur.v_dot = v1;
  cur.w = Vector::Zero(ne);
  cur.lift_memory = Vector::Zero(ne);
  traj.states.push_back(cur);
  Vector force_cur = -(K * v0) + explicit_load(0.0);  // memory term vanishes at t = 0

  for (Index k = 1; k < grid.point_count(); ++k) {
    const Real t1 = grid.time(k);
    // history part of the convolution at t1 (all but the j = k term)
    Vector hist = Vector::Zero(ne);
    for (Index j = 1; j < k; ++j) {
      hist += omega[static_cast<std::size_t>(k - j)] * strain[static_cast<std::size_t>(j)];
    }
    const Vector zk = zfull(t1);
    // known part of force(t1), the implicit part is -(K - omega0 K_B) v1
    const Vector known =
        explicit_load(t1) +
        coupling * (hist + omega[0] * (G * zk - strain0) + (1.0 - std::exp(-t1 / be)) * strain0);
    const Vector rhs = mc * (mats.mass * cur.v) + (4.0 * eps2 / dt) * (mats.mass * cur.v_dot) +
                       force_cur + known;
    State next;
    next.t = t1;
    next.v = ldlt.solve(rhs);
    VISCOMEM_REQUIRE(next.v.allFinite(), SolverFailure, "oracle_convolution: solve failed");
    next.v_dot = (2.0 / dt) * (next.v - cur.v) - cur.v_dot;
    strain.push_back(Gi * next.v + G * zk - strain0);
    const Vector conv = hist + omega[0] * strain.back();
    next.w = conv + (1.0 - std::exp(-t1 / be)) * strain0;  // memory of the full strain
    next.lift_memory = Vector::Zero(ne);
    force_cur = -(K * next.v) + memory_force(t1, conv) + explicit_load(t1);
    traj.states.push_back(next);
    cur = std::move(next);
  }
  detail::fill_displacement(traj, data, n);
  return traj;
}

/// Both sides of the a-priori energy estimate for h = eps * phi.
struct AprioriReport {
  Real lhs = 0.0;        // eps^2 |v'|^2_{L^inf H} + |v|^2_{L^inf V}
  Real rhs_data = 0.0;   // eps^2|v1|^2 + |v0|_V^2 + |phi|^2_{L1 H} + |l|^2_{W11 V'}
  Real ratio = 0.0;      // lhs / rhs_data, the fitted constant
  Real constant = 0.0;   // computable constant C_E for this instance
  bool bounded = true;   // ratio <= constant
};

/// Evaluates the a-priori estimate on a trajectory from integrate(). The
/// constant follows from the energy balance with the discrete Korn-Poincare
/// constant and the coefficient bounds.
inline AprioriReport apriori_bound_check(const Trajectory& traj, const ProblemData& data,
                                         const FemMatrices& mats, const TimeGrid& grid) {
  AprioriReport rep;
  if (traj.size() == 0) return rep;
  const DualNorms duals(mats);
  const Real eps2 = data.eps * data.eps;
  const Real dt = grid.dt();
  Real kin = 0.0;
  Real pot = 0.0;
  Real phi_l1 = 0.0;
  Real ell_l1 = 0.0;
  Real ell_rate_l1 = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const State& s = traj.states[k];
    kin = std::max(kin, eps2 * s.v_dot.dot(mats.mass * s.v_dot));
    pot = std::max(pot, s.v.dot(mats.mass * s.v) + s.v.dot(mats.stiff_unit * s.v));
    const Real w = (k == 0 || k + 1 == traj.size()) ? 0.5 * dt : dt;
    phi_l1 += w * duals.h_norm(traj.h[k]) / data.eps;
    ell_l1 += w * duals.v_dual_norm(traj.ell[k]);
    ell_rate_l1 += w * duals.v_dual_norm(traj.ell_rate[k]);
  }
  const State& s0 = traj.states.front();
  const Real init = eps2 * traj.v1.dot(mats.mass * traj.v1) + s0.v.dot(mats.mass * s0.v) +
                    s0.v.dot(mats.stiff_unit * s0.v);
  const Real w11 = ell_l1 + ell_rate_l1;
  rep.lhs = kin + pot;
  rep.rhs_data = init + phi_l1 * phi_l1 + w11 * w11;
  rep.ratio = rep.rhs_data > 0.0 ? rep.lhs / rep.rhs_data : 0.0;

  const Real cp = poincare_constant(mats);
  const Real c = 2.0 * std::max(1.0, (1.0 + cp * cp) / mats.c_A);
  const Real stored = std::max(0.5, 0.5 * (mats.C_A + mats.C_B));
  const Real q = 3.0 + 2.0 / data.T;
  rep.constant = std::max(2.0 * c * stored, 4.0 * c * c * q * q);
  rep.bounded = rep.lhs <= rep.constant * rep.rhs_data * (1.0 + 1e-12) + 1e-300;
  return rep;
}

}  // namespace viscomem
