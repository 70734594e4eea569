#pragma once

// Experiment configuration: a JSON document with nested sections. The schema
// is described in the README; unknown keys are rejected so typos surface.

#include "viscomem/catalog.hpp"
#include "viscomem/dynamic.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace viscomem {

using Json = nlohmann::json;

struct MeshConfig {
  Real length = 1.0;
  Index elements = 16;
  std::vector<Index> refinements;  // element counts for refinement studies
};

/// Piecewise-constant coefficients: `elasticity` / `viscosity` on x < interface
/// and the `_right` values on x >= interface (equal by default).
struct CoefficientConfig {
  Real elasticity = 1.0;
  Real viscosity = 1.0;
  Real elasticity_right = -1.0;  // negative: same as left
  Real viscosity_right = -1.0;
  Real interface = 0.5;
};

struct GridConfig {
  Index steps = 400;
  Real eta = 0.0;
  std::vector<Index> refinements;  // step counts for refinement studies
};

struct LoadsConfig {
  LoadSpec f;
  LoadSpec g;
  LoadSpec z;
  LoadSpec history;  // used when scenario is "history"
};

struct LaplaceConfig {
  Real s1 = 1.0;
  Real ds2 = 0.25;
  Index k_max = 6000;
  Index coercivity_points = 20;
  Real coercivity_s2_max = 10.0;
  std::vector<Real> coercivity_eps{0.5, 0.1, 0.02};
  Index trials = 100;
  Real plancherel_T = 10.0;
  Real plancherel_rate = 1.0;  // h(t) = exp(-rate t) in the Plancherel check
};

struct CubicConfig {
  Real beta = 1.0;
  Real a0 = 1.0;
  Real b0 = 2.0;
  Real c0 = 2.0;
  Real c1 = 2.0;
  Index samples = 10000;
  Index product_samples = 10000;
  Real a_max_factor = 1000.0;
};

/// Resonant forcing f = eps * amplitude * sin(omega t) M phi_1 with
/// omega = detuning * sqrt(lambda_1) / eps, lambda_1 the lowest eigenvalue of
/// K_A relative to M and phi_1 its M-normalized eigenvector.
struct CounterexampleConfig {
  Real amplitude = 1.0;
  Real detuning = 1.0;
};

/// Acceptance predicates. Columns name report fields; each listed column must
/// strictly decrease along the eps list with last <= max_ratio * first.
struct AcceptanceConfig {
  std::vector<std::string> decreasing;
  Real max_ratio = 0.25;
  Real non_decay_ratio = 0.5;  // counterexample: min >= ratio * max
  Real oracle_gap = 1e-6;
  Real energy_residual = 1e-6;
  Real order_low = 3.2;
  Real order_high = 4.8;
  Real rate_tolerance = 0.2;
  Real plancherel_gap = 1e-6;
};

struct ExperimentConfig {
  std::string experiment = "sweep";
  std::string scenario = "zero";  // initial data: zero | history | compatible
  MeshConfig mesh;
  CoefficientConfig coefficients;
  Real beta = 0.5;
  Real T = 1.0;
  GridConfig grid;
  std::vector<Real> eps{0.1};
  DampingLaw damping = DampingLaw::memory;
  LoadsConfig loads;
  LaplaceConfig laplace;
  CubicConfig cubic;
  CounterexampleConfig counterexample;
  AcceptanceConfig acceptance;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string output = "out";

  void validate() const;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"elliptic",       "dynamic", "sweep",
                                                 "counterexample", "laplace", "cubic"};
  return kinds;
}

inline void ExperimentConfig::validate() const {
  const auto& kinds = experiment_kinds();
  VISCOMEM_REQUIRE(std::find(kinds.begin(), kinds.end(), experiment) != kinds.end(), InvalidInput,
                   "config: unknown experiment kind '" + experiment + "'");
  VISCOMEM_REQUIRE(scenario == "zero" || scenario == "history" || scenario == "compatible",
                   InvalidInput, "config: scenario must be zero, history or compatible");
  VISCOMEM_REQUIRE(mesh.length > 0.0 && mesh.elements >= 2, InvalidInput,
                   "config: mesh needs length > 0 and at least 2 elements");
  for (Index e : mesh.refinements) {
    VISCOMEM_REQUIRE(e >= 2, InvalidInput, "config: mesh refinements need >= 2 elements");
  }
  VISCOMEM_REQUIRE(coefficients.elasticity > 0.0 && coefficients.viscosity > 0.0, InvalidInput,
                   "config: coefficients must be > 0");
  VISCOMEM_REQUIRE(beta > 0.0 && T > 0.0, InvalidInput, "config: beta and T must be > 0");
  VISCOMEM_REQUIRE(grid.steps >= 1, InvalidInput, "config: grid.steps must be >= 1");
  VISCOMEM_REQUIRE(grid.eta >= 0.0 && grid.eta < T, InvalidInput,
                   "config: grid.eta must lie in [0, T)");
  for (Index n : grid.refinements) {
    VISCOMEM_REQUIRE(n >= 1, InvalidInput, "config: grid refinements need >= 1 step");
  }
  VISCOMEM_REQUIRE(!eps.empty(), InvalidInput, "config: eps list is empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    VISCOMEM_REQUIRE(eps[i] > 0.0, InvalidInput, "config: eps values must be > 0");
    if (i > 0) {
      VISCOMEM_REQUIRE(eps[i] < eps[i - 1], InvalidInput,
                       "config: eps list must be strictly decreasing");
    }
  }
  loads.f.validate();
  loads.g.validate();
  loads.z.validate();
  loads.history.validate();
  VISCOMEM_REQUIRE(cubic.samples >= 1 && cubic.product_samples >= 1, InvalidInput,
                   "config: cubic sample counts must be >= 1");
  VISCOMEM_REQUIRE(laplace.trials >= 1 && laplace.coercivity_points >= 1 && laplace.k_max >= 1 &&
                       laplace.ds2 > 0.0 && laplace.s1 > 0.0,
                   InvalidInput, "config: laplace needs s1, ds2, k_max, trials and points > 0");
  VISCOMEM_REQUIRE(workers >= 1, InvalidInput, "config: workers must be >= 1");
  VISCOMEM_REQUIRE(!output.empty(), InvalidInput, "config: output directory is empty");
}

namespace detail {

inline void reject_unknown(const Json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  VISCOMEM_REQUIRE(j.is_object(), InvalidInput, "config: section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    VISCOMEM_REQUIRE(allowed.count(key) == 1, InvalidInput,
                     "config: unknown key '" + key + "' in section '" + where + "'");
  }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = c.experiment;
  j["scenario"] = c.scenario;
  j["mesh"] = {{"length", c.mesh.length},
               {"elements", c.mesh.elements},
               {"refinements", c.mesh.refinements}};
  j["coefficients"] = {{"elasticity", c.coefficients.elasticity},
                       {"viscosity", c.coefficients.viscosity},
                       {"elasticity_right", c.coefficients.elasticity_right},
                       {"viscosity_right", c.coefficients.viscosity_right},
                       {"interface", c.coefficients.interface}};
  j["beta"] = c.beta;
  j["T"] = c.T;
  j["grid"] = {{"steps", c.grid.steps}, {"eta", c.grid.eta}, {"refinements", c.grid.refinements}};
  j["eps"] = c.eps;
  j["damping"] = to_string(c.damping);
  j["loads"] = {{"f", c.loads.f}, {"g", c.loads.g}, {"z", c.loads.z}, {"history", c.loads.history}};
  j["laplace"] = {{"s1", c.laplace.s1},
                  {"ds2", c.laplace.ds2},
                  {"k_max", c.laplace.k_max},
                  {"coercivity_points", c.laplace.coercivity_points},
                  {"coercivity_s2_max", c.laplace.coercivity_s2_max},
                  {"coercivity_eps", c.laplace.coercivity_eps},
                  {"trials", c.laplace.trials},
                  {"plancherel_T", c.laplace.plancherel_T},
                  {"plancherel_rate", c.laplace.plancherel_rate}};
  j["cubic"] = {{"beta", c.cubic.beta},       {"a0", c.cubic.a0},
                {"b0", c.cubic.b0},           {"c0", c.cubic.c0},
                {"c1", c.cubic.c1},           {"samples", c.cubic.samples},
                {"product_samples", c.cubic.product_samples},
                {"a_max_factor", c.cubic.a_max_factor}};
  j["counterexample"] = {{"amplitude", c.counterexample.amplitude},
                         {"detuning", c.counterexample.detuning}};
  j["acceptance"] = {{"decreasing", c.acceptance.decreasing},
                     {"max_ratio", c.acceptance.max_ratio},
                     {"non_decay_ratio", c.acceptance.non_decay_ratio},
                     {"oracle_gap", c.acceptance.oracle_gap},
                     {"energy_residual", c.acceptance.energy_residual},
                     {"order_low", c.acceptance.order_low},
                     {"order_high", c.acceptance.order_high},
                     {"rate_tolerance", c.acceptance.rate_tolerance},
                     {"plancherel_gap", c.acceptance.plancherel_gap}};
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  using detail::read_opt;
  using detail::reject_unknown;
  reject_unknown(j,
                 {"experiment", "scenario", "mesh", "coefficients", "beta", "T", "grid", "eps",
                  "damping", "loads", "laplace", "cubic", "counterexample", "acceptance", "seed", "workers",
                  "output"},
                 "root");
  ExperimentConfig c;
  try {
    read_opt(j, "experiment", c.experiment);
    read_opt(j, "scenario", c.scenario);
    if (j.contains("mesh")) {
      const Json& m = j.at("mesh");
      reject_unknown(m, {"length", "elements", "refinements"}, "mesh");
      read_opt(m, "length", c.mesh.length);
      read_opt(m, "elements", c.mesh.elements);
      read_opt(m, "refinements", c.mesh.refinements);
    }
    if (j.contains("coefficients")) {
      const Json& m = j.at("coefficients");
      reject_unknown(m, {"elasticity", "viscosity", "elasticity_right", "viscosity_right", "interface"},
                     "coefficients");
      read_opt(m, "elasticity", c.coefficients.elasticity);
      read_opt(m, "viscosity", c.coefficients.viscosity);
      read_opt(m, "elasticity_right", c.coefficients.elasticity_right);
      read_opt(m, "viscosity_right", c.coefficients.viscosity_right);
      read_opt(m, "interface", c.coefficients.interface);
    }
    read_opt(j, "beta", c.beta);
    read_opt(j, "T", c.T);
    if (j.contains("grid")) {
      const Json& m = j.at("grid");
      reject_unknown(m, {"steps", "eta", "refinements"}, "grid");
      read_opt(m, "steps", c.grid.steps);
      read_opt(m, "eta", c.grid.eta);
      read_opt(m, "refinements", c.grid.refinements);
    }
    read_opt(j, "eps", c.eps);
    if (j.contains("damping")) c.damping = parse_damping_law(j.at("damping").get<std::string>());
    if (j.contains("loads")) {
      const Json& m = j.at("loads");
      reject_unknown(m, {"f", "g", "z", "history"}, "loads");
      read_opt(m, "f", c.loads.f);
      read_opt(m, "g", c.loads.g);
      read_opt(m, "z", c.loads.z);
      read_opt(m, "history", c.loads.history);
    }
    if (j.contains("laplace")) {
      const Json& m = j.at("laplace");
      reject_unknown(m,
                     {"s1", "ds2", "k_max", "coercivity_points", "coercivity_s2_max",
                      "coercivity_eps", "trials", "plancherel_T", "plancherel_rate"},
                     "laplace");
      read_opt(m, "s1", c.laplace.s1);
      read_opt(m, "ds2", c.laplace.ds2);
      read_opt(m, "k_max", c.laplace.k_max);
      read_opt(m, "coercivity_points", c.laplace.coercivity_points);
      read_opt(m, "coercivity_s2_max", c.laplace.coercivity_s2_max);
      read_opt(m, "coercivity_eps", c.laplace.coercivity_eps);
      read_opt(m, "trials", c.laplace.trials);
      read_opt(m, "plancherel_T", c.laplace.plancherel_T);
      read_opt(m, "plancherel_rate", c.laplace.plancherel_rate);
    }
    if (j.contains("cubic")) {
      const Json& m = j.at("cubic");
      reject_unknown(m, {"beta", "a0", "b0", "c0", "c1", "samples", "product_samples", "a_max_factor"},
                     "cubic");
      read_opt(m, "beta", c.cubic.beta);
      read_opt(m, "a0", c.cubic.a0);
      read_opt(m, "b0", c.cubic.b0);
      read_opt(m, "c0", c.cubic.c0);
      read_opt(m, "c1", c.cubic.c1);
      read_opt(m, "samples", c.cubic.samples);
      read_opt(m, "product_samples", c.cubic.product_samples);
      read_opt(m, "a_max_factor", c.cubic.a_max_factor);
    }
    if (j.contains("counterexample")) {
      const Json& m = j.at("counterexample");
      reject_unknown(m, {"amplitude", "detuning"}, "counterexample");
      read_opt(m, "amplitude", c.counterexample.amplitude);
      read_opt(m, "detuning", c.counterexample.detuning);
    }
    if (j.contains("acceptance")) {
      const Json& m = j.at("acceptance");
      reject_unknown(m,
                     {"decreasing", "max_ratio", "non_decay_ratio", "oracle_gap", "energy_residual",
                      "order_low", "order_high", "rate_tolerance", "plancherel_gap"},
                     "acceptance");
      read_opt(m, "decreasing", c.acceptance.decreasing);
      read_opt(m, "max_ratio", c.acceptance.max_ratio);
      read_opt(m, "non_decay_ratio", c.acceptance.non_decay_ratio);
      read_opt(m, "oracle_gap", c.acceptance.oracle_gap);
      read_opt(m, "energy_residual", c.acceptance.energy_residual);
      read_opt(m, "order_low", c.acceptance.order_low);
      read_opt(m, "order_high", c.acceptance.order_high);
      read_opt(m, "rate_tolerance", c.acceptance.rate_tolerance);
      read_opt(m, "plancherel_gap", c.acceptance.plancherel_gap);
    }
    read_opt(j, "seed", c.seed);
    read_opt(j, "workers", c.workers);
    read_opt(j, "output", c.output);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("config: parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  VISCOMEM_REQUIRE(in.good(), InvalidInput, "config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text of a config (sorted keys, fixed indentation).
inline std::string emit_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

/// FNV-1a 64 over the canonical config without the output directory and worker
/// count, which do not affect results.
inline std::string config_hash(const ExperimentConfig& c) {
  Json j = to_json(c);
  j.erase("output");
  j.erase("workers");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

}  // namespace viscomem
