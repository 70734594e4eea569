#pragma once

// Experiment drivers. Each run_* takes a validated config and returns a Report
// whose checks encode the acceptance predicates of that experiment.

#include "viscomem/catalog.hpp"
#include "viscomem/config.hpp"
#include "viscomem/cubic_bounds.hpp"
#include "viscomem/dynamic.hpp"
#include "viscomem/elliptic.hpp"
#include "viscomem/fem_core.hpp"
#include "viscomem/laplace.hpp"
#include "viscomem/quadrature.hpp"
#include "viscomem/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace viscomem {

/// Mesh, coefficients and operators for one discretization level.
struct Discretization {
  SpatialMesh mesh;
  CoefficientField coeffs;
  FemMatrices mats;
};

inline CoefficientField make_coefficients(const CoefficientConfig& c, const SpatialMesh& mesh) {
  const Real a_right = c.elasticity_right < 0.0 ? c.elasticity : c.elasticity_right;
  const Real b_right = c.viscosity_right < 0.0 ? c.viscosity : c.viscosity_right;
  VISCOMEM_REQUIRE(a_right > 0.0 && b_right > 0.0, InvalidInput,
                   "config: right-hand coefficients must be > 0");
  std::vector<Real> a, b;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const bool left = mesh.element_midpoint(e) < c.interface * mesh.length();
    a.push_back(left ? c.elasticity : a_right);
    b.push_back(left ? c.viscosity : b_right);
  }
  CoefficientField field = CoefficientField::from_values(std::move(a), std::move(b));
  field.validate(mesh);
  return field;
}

inline std::unique_ptr<Discretization> discretize(const ExperimentConfig& cfg, Index elements) {
  SpatialMesh mesh = SpatialMesh::uniform(cfg.mesh.length, elements);
  CoefficientField coeffs = make_coefficients(cfg.coefficients, mesh);
  FemMatrices mats = assemble(mesh, coeffs);
  return std::make_unique<Discretization>(
      Discretization{std::move(mesh), std::move(coeffs), std::move(mats)});
}

/// Interior dual load t -> factor(t) * profile with analytic derivatives.
inline Signal dual_signal(const LoadSpec& spec, const Discretization& d) {
  if (spec.is_zero()) return {};
  const Vector prof = profile_dual(spec.space, d.mesh, d.mats);
  const TimeFactor tf = spec.time;
  Signal s;
  s.value = [tf, prof](Real t) { return Vector(tf.eval(t, 0) * prof); };
  s.rate = [tf, prof](Real t) { return Vector(tf.eval(t, 1) * prof); };
  s.accel = [tf, prof](Real t) { return Vector(tf.eval(t, 2) * prof); };
  return s;
}

/// Full nodal field t -> factor(t) * interpolated profile.
inline Signal nodal_signal(const LoadSpec& spec, const Discretization& d) {
  if (spec.is_zero()) return {};
  const Vector prof = profile_nodal(spec.space, d.mesh, d.mats);
  const TimeFactor tf = spec.time;
  Signal s;
  s.value = [tf, prof](Real t) { return Vector(tf.eval(t, 0) * prof); };
  s.rate = [tf, prof](Real t) { return Vector(tf.eval(t, 1) * prof); };
  s.accel = [tf, prof](Real t) { return Vector(tf.eval(t, 2) * prof); };
  return s;
}

/// Sweep scenario: (i) general loads, (ii) f = 0, (iii) f = 0 with a history
/// solving the stationary problem for g on (-inf, 0].
inline std::string sweep_mode(const ExperimentConfig& cfg) {
  if (cfg.scenario == "compatible") return "compatible";
  return cfg.loads.f.is_zero() ? "f_zero" : "general";
}

/// Dynamic problem for one eps, with the initial data of the configured scenario.
inline ProblemData make_problem(const ExperimentConfig& cfg, const Discretization& d, Real eps,
                                DampingLaw law) {
  ProblemData data;
  data.eps = eps;
  data.beta = cfg.beta;
  data.T = cfg.T;
  data.law = law;
  data.f = dual_signal(cfg.loads.f, d);
  data.g = dual_signal(cfg.loads.g, d);
  data.z = nodal_signal(cfg.loads.z, d);
  if (cfg.scenario == "zero") {
    data.reduced = ReducedData::at_rest(d.mats, cfg.beta * eps);
  } else if (cfg.scenario == "history") {
    const Signal hist = nodal_signal(cfg.loads.history, d);
    VISCOMEM_REQUIRE(static_cast<bool>(hist), InvalidInput,
                     "config: scenario 'history' needs a nonzero loads.history");
    data.history = hist.value;
    data.history_rate = hist.rate;
  } else {
    VISCOMEM_REQUIRE(cfg.loads.f.is_zero(), InvalidInput,
                     "config: scenario 'compatible' requires f = 0");
    VISCOMEM_REQUIRE(!cfg.loads.g.is_zero(), InvalidInput,
                     "config: scenario 'compatible' needs a nonzero g");
    auto solver = std::make_shared<StationarySolver>(d.mats);
    const Signal g = data.g;
    const Signal z = data.z;
    data.history = [solver, g, z](Real tau) {
      return solver->solve(g.at(tau), z ? z.at(tau) : Vector()).values;
    };
    data.history_rate = [solver, g, z](Real tau) {
      return solver->solve(g.d1(tau), z ? z.d1(tau) : Vector()).values;
    };
  }
  return data;
}

/// Stationary reference u0(t) = R(f(t) + g(t)) with boundary values z(t).
inline std::vector<Vector> stationary_reference(const ProblemData& data, const FemMatrices& mats,
                                                const TimeGrid& grid) {
  EllipticProblem prob;
  prob.mats = &mats;
  const Index m = mats.interior_size();
  const Signal f = data.f;
  const Signal g = data.g;
  const Signal z = data.z;
  prob.load = [f, g, m](Real t) {
    Vector out = Vector::Zero(m);
    if (f) out += f.at(t);
    if (g) out += g.at(t);
    return out;
  };
  if (z) prob.lift = [z](Real t) { return z.at(t); };
  std::vector<Vector> out;
  for (auto& u : solve_stationary_trajectory(prob, grid)) out.push_back(std::move(u.values));
  return out;
}

struct SweepRow {
  Real eps = 0.0;
  Real l2_V = 0.0;            // |u_eps - u0|_{L2(0,T;V)}
  Real eps_l2_H = 0.0;        // eps |u_eps'|_{L2(0,T;H)}
  Real linf_eta_V = 0.0;      // |u_eps - u0|_{Linf(eta,T;V)}
  Real eps_linf_eta_H = 0.0;  // eps |u_eps'|_{Linf(eta,T;H)}
  Real linf_0T_V = 0.0;       // |u_eps - u0|_{Linf(0,T;V)}
  Real energy_residual = 0.0;
  Real apriori_ratio = 0.0;
  Real apriori_constant = 0.0;
  bool apriori_bounded = true;
  std::vector<std::string> warnings;
};

struct SweepReport {
  std::string mode;
  DampingLaw law = DampingLaw::memory;
  std::vector<SweepRow> rows;
  std::string config_hash;
};

inline SweepRow sweep_entry(const ExperimentConfig& cfg, const Discretization& d, Real eps,
                            DampingLaw law, const ProblemData& data) {
  const TimeGrid grid{cfg.T, cfg.grid.steps, cfg.grid.eta};
  const IntegrationResult res = integrate(data, d.mats, grid);
  const std::vector<Vector> u0 = stationary_reference(data, d.mats, grid);
  std::vector<Vector> diff;
  std::vector<Vector> vel;
  diff.reserve(u0.size());
  for (std::size_t k = 0; k < u0.size(); ++k) {
    diff.push_back(res.trajectory.u[k] - u0[k]);
    vel.push_back(res.trajectory.u_dot[k]);
  }
  const SpacetimeNorms nd = spacetime_norms(diff, grid, grid.eta, d.mats);
  const SpacetimeNorms nv = spacetime_norms(vel, grid, grid.eta, d.mats);
  const SpacetimeNorms nd0 = spacetime_norms(diff, grid, 0.0, d.mats);
  SweepRow row;
  row.eps = eps;
  row.l2_V = nd.l2_0T_V;
  row.eps_l2_H = eps * nv.l2_0T_H;
  row.linf_eta_V = nd.linf_etaT_V;
  row.eps_linf_eta_H = eps * nv.linf_etaT_H;
  row.linf_0T_V = nd0.linf_etaT_V;
  row.energy_residual = energy_residual(res.ledger);
  const AprioriReport ap = apriori_bound_check(res.trajectory, data, d.mats, grid);
  row.apriori_ratio = ap.ratio;
  row.apriori_constant = ap.constant;
  row.apriori_bounded = ap.bounded;
  row.warnings = res.warnings;
  return row;
}

/// Runs every eps of the config in parallel; rows come back in eps order.
/// `make_data` builds the problem for one eps.
template <class MakeData>
SweepReport run_eps_sweep(const ExperimentConfig& cfg, const Discretization& d, DampingLaw law,
                          MakeData&& make_data) {
  SweepReport rep;
  rep.mode = sweep_mode(cfg);
  rep.law = law;
  rep.config_hash = config_hash(cfg);
  const auto n = static_cast<Index>(cfg.eps.size());
  rep.rows.resize(cfg.eps.size());
  std::vector<std::string> errors(cfg.eps.size());
  std::vector<char> bad_input(cfg.eps.size(), 0);
  detail::parallel_for(n, cfg.workers, [&](Index i, unsigned) {
    const auto k = static_cast<std::size_t>(i);
    const Real eps = cfg.eps[k];
    try {
      rep.rows[k] = sweep_entry(cfg, d, eps, law, make_data(eps));
    } catch (const InvalidInput& e) {
      errors[k] = fmt::format("eps = {}: {}", eps, e.what());
      bad_input[k] = 1;
    } catch (const std::exception& e) {
      errors[k] = fmt::format("eps = {}: {}", eps, e.what());
    }
  });
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k].empty()) continue;
    if (bad_input[k]) throw InvalidInput("sweep aborted at " + errors[k]);
    throw SolverFailure("sweep aborted at " + errors[k]);
  }
  return rep;
}

inline Table sweep_table(const std::string& name, const SweepReport& rep) {
  Table t{name,
          {"eps", "l2_V", "eps_l2_H", "linf_eta_V", "eps_linf_eta_H", "linf_0T_V",
           "energy_residual", "apriori_ratio"},
          {}};
  for (const auto& r : rep.rows) {
    t.add_row({r.eps, r.l2_V, r.eps_l2_H, r.linf_eta_V, r.eps_linf_eta_H, r.linf_0T_V,
               r.energy_residual, r.apriori_ratio});
  }
  return t;
}

namespace detail {

inline Report start_report(const ExperimentConfig& cfg) {
  Report r;
  r.experiment = cfg.experiment;
  r.config_hash = config_hash(cfg);
  r.seed = cfg.seed;
  r.config_text = emit_config(cfg);
  return r;
}

inline void add_apriori_check(Report& r, const SweepReport& s, const std::string& label) {
  bool ok = true;
  Real worst = 0.0;
  for (const auto& row : s.rows) {
    ok = ok && row.apriori_bounded;
    if (row.apriori_constant > 0.0) worst = std::max(worst, row.apriori_ratio / row.apriori_constant);
  }
  r.checks.push_back({label + " a-priori bound", ok,
                      fmt::format("max ratio / constant = {:.3g}", worst)});
}

inline void collect_warnings(Report& r, const SweepReport& s) {
  for (const auto& row : s.rows) {
    for (const auto& w : row.warnings) r.warnings.push_back(fmt::format("eps = {}: {}", row.eps, w));
  }
}

}  // namespace detail

/// Sweep over the eps list with the configured damping law and scenario.
inline Report run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto d = discretize(cfg, cfg.mesh.elements);
  const SweepReport s = run_eps_sweep(cfg, *d, cfg.damping, [&](Real eps) {
    return make_problem(cfg, *d, eps, cfg.damping);
  });
  Report r = detail::start_report(cfg);
  r.tables.push_back(sweep_table("sweep", s));
  detail::collect_warnings(r, s);
  for (const auto& col : cfg.acceptance.decreasing) {
    r.checks.push_back(decay_check(r.tables.back(), col, cfg.acceptance.max_ratio));
  }
  detail::add_apriori_check(r, s, "sweep");
  return r;
}

/// Resonant forcing of the first elastic mode. Without damping the response
/// grows linearly in time with an eps-independent rate, so u_eps does not
/// approach u0; the same data with memory damping is swept as a contrast.
inline Report run_counterexample(const ExperimentConfig& cfg) {
  cfg.validate();
  VISCOMEM_REQUIRE(cfg.damping == DampingLaw::undamped, InvalidInput,
                   "counterexample: damping must be 'undamped'");
  VISCOMEM_REQUIRE(cfg.scenario == "zero", InvalidInput,
                   "counterexample: scenario must be 'zero'");
  const auto d = discretize(cfg, cfg.mesh.elements);
  const EigenPair mode = lowest_generalized_eigenpair(d->mats.stiff_A, d->mats.mass);
  const Vector profile = d->mats.mass * mode.vector;
  const Real amp = cfg.counterexample.amplitude;
  const Real detune = cfg.counterexample.detuning;
  const Real root = std::sqrt(mode.value);

  const auto make = [&](DampingLaw law) {
    return [&, law](Real eps) {
      ProblemData data;
      data.eps = eps;
      data.beta = cfg.beta;
      data.T = cfg.T;
      data.law = law;
      const Real w = detune * root / eps;
      const Real c = eps * amp;
      data.f.value = [=](Real t) { return Vector(c * std::sin(w * t) * profile); };
      data.f.rate = [=](Real t) { return Vector(c * w * std::cos(w * t) * profile); };
      data.f.accel = [=](Real t) { return Vector(-c * w * w * std::sin(w * t) * profile); };
      data.reduced = ReducedData::at_rest(d->mats, cfg.beta * eps);
      return data;
    };
  };
  const SweepReport und = run_eps_sweep(cfg, *d, DampingLaw::undamped, make(DampingLaw::undamped));
  const SweepReport mem = run_eps_sweep(cfg, *d, DampingLaw::memory, make(DampingLaw::memory));

  Report r = detail::start_report(cfg);
  r.tables.push_back(sweep_table("undamped", und));
  r.tables.push_back(sweep_table("memory", mem));
  r.scalars.emplace_back("lambda_1", mode.value);
  detail::collect_warnings(r, und);
  detail::collect_warnings(r, mem);

  const std::vector<Real> e = r.tables[0].column("l2_V");
  const Real lo = *std::min_element(e.begin(), e.end());
  const Real hi = *std::max_element(e.begin(), e.end());
  r.scalars.emplace_back("undamped_min_over_max", lo / hi);
  r.checks.push_back({"undamped.l2_V does not decay", lo >= cfg.acceptance.non_decay_ratio * hi,
                      fmt::format("min/max = {:.4g} (limit {:.4g})", lo / hi,
                                  cfg.acceptance.non_decay_ratio)});
  for (const auto& col : cfg.acceptance.decreasing) {
    r.checks.push_back(decay_check(r.tables[1], col, cfg.acceptance.max_ratio));
  }
  return r;
}

/// Errors of the P1 solution against the exact solution in H and V norms.
struct ManufacturedError {
  Real h = 0.0;
  Real error_H = 0.0;
  Real error_V = 0.0;
};

/// Exact solution of -(a u')' = profile on (0, L) with u(0) = u(L) = 0 for a
/// constant coefficient a; returns (u, u') at x.
inline std::pair<Real, Real> manufactured_solution(const SpaceProfile& p, Real a, Real L, Real x) {
  const Real A = p.amplitude;
  if (p.family == "constant") {
    return {A * x * (L - x) / (2.0 * a), A * (L - 2.0 * x) / (2.0 * a)};
  }
  if (p.family == "sine_mode") {
    const Real k = p.mode * M_PI / L;
    return {A * std::sin(k * x) / (a * k * k), A * std::cos(k * x) / (a * k)};
  }
  if (p.family == "parabola") {
    const Real C = A * L * L * L / (12.0 * a);
    const Real u = -A * (L * x * x * x / 6.0 - x * x * x * x / 12.0) / a + C * x;
    const Real du = -A * (L * x * x / 2.0 - x * x * x / 3.0) / a + C;
    return {u, du};
  }
  throw InvalidInput("elliptic: no closed-form solution for space family '" + p.family + "'");
}

inline ManufacturedError manufactured_error(const Discretization& d, const Vector& uh,
                                            const SpaceProfile& p, Real a) {
  const auto& rule = gauss_rule<8>();
  Real eH = 0.0;
  Real eD = 0.0;
  const Real L = d.mesh.length();
  for (Index e = 0; e < d.mesh.element_count(); ++e) {
    const Real x0 = d.mesh.node(e);
    const Real h = d.mesh.element_length(e);
    const Real slope = (uh[e + 1] - uh[e]) / h;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Real xi = 0.5 * (rule.nodes[q] + 1.0);
      const Real x = x0 + xi * h;
      const Real w = 0.5 * h * rule.weights[q];
      const auto [u, du] = manufactured_solution(p, a, L, x);
      const Real diff = u - (uh[e] + xi * (uh[e + 1] - uh[e]));
      eH += w * diff * diff;
      eD += w * (du - slope) * (du - slope);
    }
  }
  return {d.mesh.max_element_length(), std::sqrt(eH), std::sqrt(eH + eD)};
}

/// Manufactured-solution refinement study of the stationary problem with the
/// spatial profile of f as the load and a constant elasticity coefficient.
inline Report run_elliptic(const ExperimentConfig& cfg) {
  cfg.validate();
  const CoefficientConfig& cc = cfg.coefficients;
  VISCOMEM_REQUIRE(cc.elasticity_right < 0.0 || cc.elasticity_right == cc.elasticity, InvalidInput,
                   "elliptic: the manufactured solution needs a constant elasticity");
  VISCOMEM_REQUIRE(cfg.loads.g.is_zero() && cfg.loads.z.is_zero(), InvalidInput,
                   "elliptic: only f is used; set g and z to zero");
  std::vector<Index> levels = cfg.mesh.refinements;
  if (levels.empty()) levels = {cfg.mesh.elements};
  const SpaceProfile& prof = cfg.loads.f.space;

  Report r = detail::start_report(cfg);
  Table t{"elliptic", {"elements", "h", "error_H", "error_V", "order_H", "order_V"}, {}};
  std::optional<ManufacturedError> prev;
  std::vector<Real> orders_H, orders_V;
  for (Index n : levels) {
    const auto d = discretize(cfg, n);
    const StationarySolver solver(d->mats);
    const Vector load = profile_dual(prof, d->mesh, d->mats);
    const NodalField u = solver.solve(load, Vector());
    const ManufacturedError err = manufactured_error(*d, u.values, prof, cc.elasticity);
    Real oH = 0.0, oV = 0.0;
    if (prev) {
      const Real lr = std::log(prev->h / err.h);
      oH = std::log(prev->error_H / err.error_H) / lr;
      oV = std::log(prev->error_V / err.error_V) / lr;
      orders_H.push_back(oH);
      orders_V.push_back(oV);
    }
    t.add_row({static_cast<Real>(n), err.h, err.error_H, err.error_V, oH, oV});
    prev = err;
  }
  r.tables.push_back(t);
  const Real tol = cfg.acceptance.rate_tolerance;
  const auto order_check = [&](const std::string& name, const std::vector<Real>& orders,
                               Real expected) {
    bool ok = !orders.empty();
    for (Real o : orders) ok = ok && std::abs(o - expected) <= tol;
    std::string list;
    for (Real o : orders) list += fmt::format("{}{:.4f}", list.empty() ? "" : " ", o);
    r.checks.push_back({name, ok, fmt::format("orders [{}], expected {} +- {}", list, expected, tol)});
  };
  order_check("V-norm order", orders_V, 1.0);
  order_check("H-norm order", orders_H, 2.0);
  return r;
}

/// Internal-variable scheme against the convolution oracle at grid.steps, and
/// the energy-balance residual over the grid refinements.
inline Report run_dynamic(const ExperimentConfig& cfg) {
  cfg.validate();
  VISCOMEM_REQUIRE(!cfg.eps.empty(), InvalidInput, "dynamic: eps list is empty");
  const auto d = discretize(cfg, cfg.mesh.elements);
  const Real eps = cfg.eps.front();
  const ProblemData data = make_problem(cfg, *d, eps, cfg.damping);
  Report r = detail::start_report(cfg);

  const TimeGrid grid{cfg.T, cfg.grid.steps, cfg.grid.eta};
  const IntegrationResult res = integrate(data, d->mats, grid);
  for (const auto& w : res.warnings) r.warnings.push_back(w);
  if (cfg.damping == DampingLaw::memory) {
    const Trajectory oracle = oracle_convolution(data, d->mats, grid);
    Real gap = 0.0;
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      gap = std::max(gap, (res.trajectory.u[k] - oracle.u[k]).cwiseAbs().maxCoeff());
    }
    Table t{"oracle", {"steps", "max_nodal_gap"}, {}};
    t.add_row({static_cast<Real>(grid.steps), gap});
    r.tables.push_back(t);
    r.checks.push_back({"oracle gap", gap <= cfg.acceptance.oracle_gap,
                        fmt::format("gap = {:.3g} (limit {:.3g})", gap, cfg.acceptance.oracle_gap)});
  }

  Table ledger{"ledger", {"t", "kinetic", "elastic", "memory", "dissipation", "work", "residual"}, {}};
  const EnergyLedger& L = res.ledger;
  for (std::size_t k = 0; k < L.size(); ++k) {
    ledger.add_row({L.t[k], L.kinetic[k], L.elastic[k], L.memory[k], L.dissipation[k], L.work[k],
                    L.residual[k]});
  }
  r.tables.push_back(ledger);

  if (!cfg.grid.refinements.empty()) {
    Table t{"energy", {"steps", "relative_residual", "ratio"}, {}};
    Real prev = 0.0;
    std::vector<Real> ratios;
    for (Index n : cfg.grid.refinements) {
      const TimeGrid g{cfg.T, n, cfg.grid.eta};
      const Real res_n = energy_residual(integrate(data, d->mats, g).ledger);
      const Real ratio = prev > 0.0 ? prev / res_n : 0.0;
      if (prev > 0.0) ratios.push_back(ratio);
      t.add_row({static_cast<Real>(n), res_n, ratio});
      prev = res_n;
    }
    r.tables.push_back(t);
    const Real finest = t.rows.back()[1];
    r.checks.push_back({"energy residual", finest <= cfg.acceptance.energy_residual,
                        fmt::format("residual = {:.3g} at {} steps (limit {:.3g})", finest,
                                    cfg.grid.refinements.back(), cfg.acceptance.energy_residual)});
    bool ok = !ratios.empty();
    for (Real q : ratios) ok = ok && q >= cfg.acceptance.order_low && q <= cfg.acceptance.order_high;
    std::string list;
    for (Real q : ratios) list += fmt::format("{}{:.3f}", list.empty() ? "" : " ", q);
    r.checks.push_back({"energy residual refinement ratio", ok,
                        fmt::format("ratios [{}] within [{}, {}]", list, cfg.acceptance.order_low,
                                    cfg.acceptance.order_high)});
  }
  return r;
}

/// Frequency-domain study: coercivity on a grid of frequencies, line distances
/// over the eps list and a Plancherel check of the transform quadrature.
inline Report run_laplace_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto d = discretize(cfg, cfg.mesh.elements);
  const LaplaceConfig& lc = cfg.laplace;
  Report r = detail::start_report(cfg);
  const CoercivitySpec spec = make_coercivity_spec(d->mats, cfg.beta);
  r.scalars.emplace_back("a0", spec.a0);
  r.scalars.emplace_back("b0", spec.b0);
  r.scalars.emplace_back("alpha", spec.alpha);
  r.scalars.emplace_back("gamma", spec.gamma);

  Table coer{"coercivity", {"eps", "s1", "s2", "K", "trials", "passed", "min_margin"}, {}};
  std::size_t trials = 0, passed = 0;
  std::uint64_t stream = 0;
  for (Real eps : lc.coercivity_eps) {
    for (Index i = 0; i < lc.coercivity_points; ++i) {
      const Real s2 = lc.coercivity_points == 1
                          ? 0.0
                          : -lc.coercivity_s2_max +
                                2.0 * lc.coercivity_s2_max * static_cast<Real>(i) /
                                    static_cast<Real>(lc.coercivity_points - 1);
      const ComplexFrequency s(lc.s1, s2);
      const CoercivityReport cr = verify_coercivity(spec, d->mats, s, eps,
                                                    static_cast<std::size_t>(lc.trials),
                                                    derive_seed(cfg.seed, stream++));
      trials += cr.trials;
      passed += cr.passed;
      coer.add_row({eps, lc.s1, s2, cr.K, static_cast<Real>(cr.trials),
                    static_cast<Real>(cr.passed), cr.min_margin});
    }
  }
  r.tables.push_back(coer);
  r.checks.push_back({"coercivity", trials > 0 && passed == trials,
                      fmt::format("{} of {} trials", passed, trials)});

  const TimeFactor tf = cfg.loads.g.time;
  VISCOMEM_REQUIRE(!cfg.loads.g.is_zero(), InvalidInput, "laplace: the line study uses g; it is zero");
  const LineProblem prob{&d->mats, cfg.beta,
                         SeparableLoad{[tf](Real t) { return tf.eval(t); },
                                       profile_dual(cfg.loads.g.space, d->mesh, d->mats), cfg.T}};
  const LineGrid line{lc.s1, lc.ds2, lc.k_max};
  Table lt{"line", {"eps", "distance", "tail_bound", "load_tail", "tail_fraction"}, {}};
  Real worst_fraction = 0.0;
  for (Real eps : cfg.eps) {
    const LineDistance ld = line_distance(eps, line, prob, cfg.workers);
    const Real frac = ld.value > 0.0 ? ld.tail_bound / ld.value : 0.0;
    worst_fraction = std::max(worst_fraction, frac);
    lt.add_row({eps, ld.value, ld.tail_bound, ld.load_tail, frac});
  }
  r.tables.push_back(lt);
  for (const auto& col : cfg.acceptance.decreasing) {
    r.checks.push_back(decay_check(lt, col, cfg.acceptance.max_ratio));
  }
  r.checks.push_back({"line truncation tail", worst_fraction <= 0.1,
                      fmt::format("max tail / distance = {:.3g} (limit 0.1)", worst_fraction)});

  const Real rate = lc.plancherel_rate;
  const PlancherelReport pr =
      plancherel_check([rate](Real t) { return std::exp(-rate * t); }, lc.plancherel_T, line);
  Table pt{"plancherel", {"frequency_side", "time_side", "tail", "relative_gap"}, {}};
  pt.add_row({pr.frequency_side, pr.time_side, pr.tail, pr.relative_gap});
  r.tables.push_back(pt);
  r.checks.push_back({"plancherel", pr.relative_gap <= cfg.acceptance.plancherel_gap,
                      fmt::format("gap = {:.3g} (limit {:.3g})", pr.relative_gap,
                                  cfg.acceptance.plancherel_gap)});
  return r;
}

/// Root localization of the cubic over the sampled box and the product
/// inequality on random half-plane pairs.
inline Report run_cubic(const ExperimentConfig& cfg) {
  cfg.validate();
  const CubicConfig& cc = cfg.cubic;
  const CubicBox box{cc.beta, cc.a0, cc.b0, cc.c0, cc.c1};
  Report r = detail::start_report(cfg);
  const LocalizationReport loc = verify_localization(
      box, static_cast<std::size_t>(cc.samples), derive_seed(cfg.seed, 0), cc.a_max_factor);
  const ProductReport prod = verify_product_inequality(static_cast<std::size_t>(cc.product_samples),
                                                       derive_seed(cfg.seed, 1));
  Table t{"localization",
          {"samples", "passed", "sign_checks_passed", "pair_identity_checked",
           "pair_identity_passed", "alpha", "min_slack_left", "min_slack_right", "max_residual"},
          {}};
  t.add_row({static_cast<Real>(loc.samples), static_cast<Real>(loc.passed),
             static_cast<Real>(loc.sign_checks_passed), static_cast<Real>(loc.pair_identity_checked),
             static_cast<Real>(loc.pair_identity_passed), loc.alpha, loc.min_slack_left,
             loc.min_slack_right, loc.max_residual});
  r.tables.push_back(t);
  Table p{"product", {"samples", "passed", "min_margin"}, {}};
  p.add_row({static_cast<Real>(prod.samples), static_cast<Real>(prod.passed), prod.min_margin});
  r.tables.push_back(p);
  r.scalars.emplace_back("alpha", loc.alpha);
  r.checks.push_back({"roots localized", loc.passed == loc.samples,
                      fmt::format("{} of {} samples", loc.passed, loc.samples)});
  r.checks.push_back({"sign checks", loc.sign_checks_passed == loc.samples,
                      fmt::format("{} of {} samples", loc.sign_checks_passed, loc.samples)});
  r.checks.push_back({"pair identity", loc.pair_identity_passed == loc.pair_identity_checked,
                      fmt::format("{} of {} checked", loc.pair_identity_passed,
                                  loc.pair_identity_checked)});
  r.checks.push_back({"product inequality", prod.passed == prod.samples,
                      fmt::format("{} of {} pairs", prod.passed, prod.samples)});
  return r;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "elliptic") return run_elliptic(cfg);
  if (cfg.experiment == "dynamic") return run_dynamic(cfg);
  if (cfg.experiment == "sweep") return run_sweep(cfg);
  if (cfg.experiment == "counterexample") return run_counterexample(cfg);
  if (cfg.experiment == "laplace") return run_laplace_study(cfg);
  if (cfg.experiment == "cubic") return run_cubic(cfg);
  throw InvalidInput("unknown experiment kind '" + cfg.experiment + "'");
}

}  // namespace viscomem
