#pragma once

// Named analytic families for loads, lifts and histories. A load is a time
// factor times a spatial profile; every time factor has closed-form first and
// second derivatives.

#include "viscomem/fem_core.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace viscomem {

/// Scalar time factor. Families and parameters:
///   zero
///   constant     amplitude
///   polynomial   coefficients c_0, c_1, ... (sum c_k t^k)
///   sinusoid     amplitude sin(frequency t + phase)
///   exponential  amplitude exp(rate t)
///   sin_squared  amplitude sin^2(pi t / duration)
struct TimeFactor {
  std::string family = "zero";
  Real amplitude = 1.0;
  Real frequency = 1.0;
  Real phase = 0.0;
  Real rate = 0.0;
  Real duration = 1.0;
  std::vector<Real> coefficients;

  void validate() const {
    static const std::vector<std::string> known = {"zero",     "constant",    "polynomial",
                                                   "sinusoid", "exponential", "sin_squared"};
    VISCOMEM_REQUIRE(std::find(known.begin(), known.end(), family) != known.end(), InvalidInput,
                     "unknown time family '" + family + "'");
    VISCOMEM_REQUIRE(std::isfinite(amplitude) && std::isfinite(frequency) &&
                         std::isfinite(phase) && std::isfinite(rate),
                     InvalidInput, "time family '" + family + "' has non-finite parameters");
    if (family == "sin_squared") {
      VISCOMEM_REQUIRE(duration > 0.0, InvalidInput, "sin_squared: duration must be > 0");
    }
  }

  /// Derivative of order 0, 1 or 2.
  [[nodiscard]] Real eval(Real t, int order = 0) const {
    if (family == "zero") return 0.0;
    if (family == "constant") return order == 0 ? amplitude : 0.0;
    if (family == "polynomial") {
      Real acc = 0.0;
      for (std::size_t k = coefficients.size(); k-- > 0;) {
        Real c = coefficients[k];
        if (order >= 1) c *= static_cast<Real>(k);
        if (order >= 2) c *= static_cast<Real>(k) - 1.0;
        if (static_cast<int>(k) < order) c = 0.0;
        const int power = std::max(0, static_cast<int>(k) - order);
        acc += c * std::pow(t, power);
      }
      return acc;
    }
    if (family == "sinusoid") {
      const Real arg = frequency * t + phase;
      if (order == 0) return amplitude * std::sin(arg);
      if (order == 1) return amplitude * frequency * std::cos(arg);
      return -amplitude * frequency * frequency * std::sin(arg);
    }
    if (family == "exponential") {
      return amplitude * std::pow(rate, order) * std::exp(rate * t);
    }
    // sin^2(k t) = (1 - cos(2 k t)) / 2
    const Real k = M_PI / duration;
    if (order == 0) return amplitude * 0.5 * (1.0 - std::cos(2.0 * k * t));
    if (order == 1) return amplitude * k * std::sin(2.0 * k * t);
    return amplitude * 2.0 * k * k * std::cos(2.0 * k * t);
  }
};

/// Spatial profile on (0, L). Families:
///   zero
///   constant   amplitude
///   linear     amplitude (offset + x / L)
///   parabola   amplitude x (L - x)
///   sine_mode  amplitude sin(mode pi x / L)
///   eigenmode  first discrete eigenmode of K_A u = lambda M u, max-normalized
struct SpaceProfile {
  std::string family = "zero";
  Real amplitude = 1.0;
  Real offset = 0.0;
  int mode = 1;

  void validate() const {
    static const std::vector<std::string> known = {"zero",     "constant",  "linear",
                                                   "parabola", "sine_mode", "eigenmode"};
    VISCOMEM_REQUIRE(std::find(known.begin(), known.end(), family) != known.end(), InvalidInput,
                     "unknown space family '" + family + "'");
    VISCOMEM_REQUIRE(mode >= 1, InvalidInput, "sine_mode: mode must be >= 1");
  }

  [[nodiscard]] bool is_eigenmode() const { return family == "eigenmode"; }

  [[nodiscard]] Real eval(Real x, Real L) const {
    if (family == "zero") return 0.0;
    if (family == "constant") return amplitude;
    if (family == "linear") return amplitude * (offset + x / L);
    if (family == "parabola") return amplitude * x * (L - x);
    if (family == "sine_mode") return amplitude * std::sin(mode * M_PI * x / L);
    throw InvalidInput("space family '" + family + "' has no pointwise formula");
  }
};

/// Lowest eigenpair of K_A u = lambda M u on the interior, eigenvector scaled to
/// unit max-norm with a positive sum.
inline EigenPair first_elastic_mode(const FemMatrices& mats) {
  EigenPair p = lowest_generalized_eigenpair(mats.stiff_A, mats.mass);
  const Real scale = p.vector.cwiseAbs().maxCoeff();
  p.vector /= (p.vector.sum() < 0.0 ? -scale : scale);
  return p;
}

/// Full nodal interpolant of a profile.
inline Vector profile_nodal(const SpaceProfile& prof, const SpatialMesh& mesh,
                            const FemMatrices& mats) {
  prof.validate();
  if (prof.is_eigenmode()) {
    Vector u = Vector::Zero(mesh.node_count());
    u.segment(1, mesh.interior_count()) = prof.amplitude * first_elastic_mode(mats).vector;
    return u;
  }
  return interpolate(mesh, [&](Real x) { return prof.eval(x, mesh.length()); });
}

/// Interior dual vector (integral of the profile against each hat function).
inline Vector profile_dual(const SpaceProfile& prof, const SpatialMesh& mesh,
                           const FemMatrices& mats) {
  prof.validate();
  if (prof.is_eigenmode()) {
    return prof.amplitude * (mats.mass * first_elastic_mode(mats).vector);
  }
  const Vector F = assemble_load(mesh, [&](Real x) { return prof.eval(x, mesh.length()); });
  return F.segment(1, mesh.interior_count());
}

/// Time factor times spatial profile.
struct LoadSpec {
  TimeFactor time;
  SpaceProfile space;

  [[nodiscard]] bool is_zero() const { return time.family == "zero" || space.family == "zero"; }
  void validate() const {
    time.validate();
    space.validate();
  }
};

inline void to_json(nlohmann::json& j, const TimeFactor& f) {
  j = nlohmann::json{{"family", f.family}};
  if (f.family == "zero") return;
  if (f.family == "polynomial") {
    j["coefficients"] = f.coefficients;
    return;
  }
  j["amplitude"] = f.amplitude;
  if (f.family == "sinusoid") {
    j["frequency"] = f.frequency;
    j["phase"] = f.phase;
  }
  if (f.family == "exponential") j["rate"] = f.rate;
  if (f.family == "sin_squared") j["duration"] = f.duration;
}

inline void from_json(const nlohmann::json& j, TimeFactor& f) {
  f = TimeFactor{};
  f.family = j.at("family").get<std::string>();
  f.amplitude = j.value("amplitude", 1.0);
  f.frequency = j.value("frequency", 1.0);
  f.phase = j.value("phase", 0.0);
  f.rate = j.value("rate", 0.0);
  f.duration = j.value("duration", 1.0);
  f.coefficients = j.value("coefficients", std::vector<Real>{});
  f.validate();
}

inline void to_json(nlohmann::json& j, const SpaceProfile& p) {
  j = nlohmann::json{{"family", p.family}};
  if (p.family == "zero") return;
  j["amplitude"] = p.amplitude;
  if (p.family == "linear") j["offset"] = p.offset;
  if (p.family == "sine_mode") j["mode"] = p.mode;
}

inline void from_json(const nlohmann::json& j, SpaceProfile& p) {
  p = SpaceProfile{};
  p.family = j.at("family").get<std::string>();
  p.amplitude = j.value("amplitude", 1.0);
  p.offset = j.value("offset", 0.0);
  p.mode = j.value("mode", 1);
  p.validate();
}

inline void to_json(nlohmann::json& j, const LoadSpec& l) {
  j = nlohmann::json{{"time", l.time}, {"space", l.space}};
}

inline void from_json(const nlohmann::json& j, LoadSpec& l) {
  l.time = j.at("time").get<TimeFactor>();
  l.space = j.at("space").get<SpaceProfile>();
}

}  // namespace viscomem
