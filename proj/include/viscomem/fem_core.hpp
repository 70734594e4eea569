#pragma once

// Piecewise-linear finite elements on an interval (0, L): mesh, coefficient
// fields, operator assembly with Dirichlet elimination, and the spatial and
// space-time norms used throughout the library.

#include "viscomem/common.hpp"
#include "viscomem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace viscomem {

/// Strictly increasing node coordinates 0 = x_0 < ... < x_n = L.
class SpatialMesh {
public:
  explicit SpatialMesh(std::vector<Real> nodes) : nodes_(std::move(nodes)) {
    VISCOMEM_REQUIRE(nodes_.size() >= 3, InvalidInput,
                     "SpatialMesh: at least 3 nodes are required");
    VISCOMEM_REQUIRE(nodes_.front() == 0.0, InvalidInput,
                     "SpatialMesh: first node must be 0");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
      VISCOMEM_REQUIRE(nodes_[i + 1] - nodes_[i] > 0.0, InvalidInput,
                       "SpatialMesh: non-positive element length at element " +
                           std::to_string(i));
    }
  }

  static SpatialMesh uniform(Real length, Index elements) {
    VISCOMEM_REQUIRE(length > 0.0, InvalidInput, "SpatialMesh: length must be > 0");
    VISCOMEM_REQUIRE(elements >= 2, InvalidInput,
                     "SpatialMesh: at least 2 elements are required");
    std::vector<Real> x(static_cast<std::size_t>(elements) + 1);
    for (Index i = 0; i <= elements; ++i) {
      x[static_cast<std::size_t>(i)] =
          length * static_cast<Real>(i) / static_cast<Real>(elements);
    }
    x.back() = length;
    return SpatialMesh(std::move(x));
  }

  [[nodiscard]] Index node_count() const { return static_cast<Index>(nodes_.size()); }
  [[nodiscard]] Index element_count() const { return node_count() - 1; }
  [[nodiscard]] Index interior_count() const { return node_count() - 2; }
  [[nodiscard]] Real length() const { return nodes_.back(); }
  [[nodiscard]] Real node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] Real element_length(Index e) const { return node(e + 1) - node(e); }
  [[nodiscard]] Real element_midpoint(Index e) const { return 0.5 * (node(e) + node(e + 1)); }
  [[nodiscard]] std::span<const Real> nodes() const { return nodes_; }
  [[nodiscard]] Real max_element_length() const {
    Real h = 0.0;
    for (Index e = 0; e < element_count(); ++e) h = std::max(h, element_length(e));
    return h;
  }

private:
  std::vector<Real> nodes_;
};

/// Piecewise-constant elasticity a_e and viscosity b_e with declared bounds
/// c_A <= a_e <= C_A and c_B <= b_e <= C_B.
struct CoefficientField {
  std::vector<Real> elasticity;
  std::vector<Real> viscosity;
  Real c_A = 0.0;
  Real C_A = 0.0;
  Real c_B = 0.0;
  Real C_B = 0.0;

  /// Constant fields; bounds are tight.
  static CoefficientField constant(const SpatialMesh& mesh, Real a, Real b) {
    const auto n = static_cast<std::size_t>(mesh.element_count());
    return CoefficientField{std::vector<Real>(n, a), std::vector<Real>(n, b), a, a, b, b};
  }

  /// Per-element values with bounds taken from their extrema.
  static CoefficientField from_values(std::vector<Real> a, std::vector<Real> b) {
    VISCOMEM_REQUIRE(!a.empty() && !b.empty(), InvalidInput,
                     "CoefficientField: empty coefficient arrays");
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    CoefficientField c{std::move(a), std::move(b), *amin, *amax, *bmin, *bmax};
    return c;
  }

  void validate(const SpatialMesh& mesh) const {
    const auto n = static_cast<std::size_t>(mesh.element_count());
    VISCOMEM_REQUIRE(elasticity.size() == n && viscosity.size() == n, InvalidInput,
                     "CoefficientField: size does not match element count");
    VISCOMEM_REQUIRE(c_A > 0.0 && c_A <= C_A, InvalidInput,
                     "CoefficientField: elasticity bounds must satisfy 0 < c_A <= C_A");
    VISCOMEM_REQUIRE(c_B > 0.0 && c_B <= C_B, InvalidInput,
                     "CoefficientField: viscosity bounds must satisfy 0 < c_B <= C_B");
    for (std::size_t e = 0; e < n; ++e) {
      VISCOMEM_REQUIRE(elasticity[e] >= c_A && elasticity[e] <= C_A, InvalidInput,
                       "CoefficientField: elasticity outside bounds at element " +
                           std::to_string(e));
      VISCOMEM_REQUIRE(viscosity[e] >= c_B && viscosity[e] <= C_B, InvalidInput,
                       "CoefficientField: viscosity outside bounds at element " +
                           std::to_string(e));
    }
  }
};

/// Nodal values on the full mesh. When `homogeneous` is set the two boundary
/// entries are exactly zero.
template <class Scalar>
struct NodalFieldT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  bool homogeneous = false;
};
using NodalField = NodalFieldT<Real>;
using ComplexNodalField = NodalFieldT<Complex>;

/// Uniform time grid t_k = k * T / N on [0, T], with an optional window start eta.
struct TimeGrid {
  Real T = 1.0;
  Index steps = 1;
  Real eta = 0.0;

  void validate() const {
    VISCOMEM_REQUIRE(T > 0.0, InvalidInput, "TimeGrid: T must be > 0");
    VISCOMEM_REQUIRE(steps >= 1, InvalidInput, "TimeGrid: step count must be >= 1");
    VISCOMEM_REQUIRE(eta >= 0.0 && eta < T, InvalidInput, "TimeGrid: eta must lie in [0, T)");
  }
  [[nodiscard]] Real dt() const { return T / static_cast<Real>(steps); }
  [[nodiscard]] Real time(Index k) const {
    return k == steps ? T : T * static_cast<Real>(k) / static_cast<Real>(steps);
  }
  [[nodiscard]] Index point_count() const { return steps + 1; }
};

/// Assembled P1 operators. Matrices suffixed `_full` act on all nodes; the
/// unsuffixed ones are the Dirichlet-eliminated blocks on interior nodes.
/// `strain` maps nodal values to per-element strains (u_{e+1} - u_e) / h_e.
struct FemMatrices {
  SparseMatrix mass_full, stiff_A_full, stiff_B_full, stiff_unit_full, strain_full;
  SparseMatrix mass, stiff_A, stiff_B, stiff_unit, strain;
  Vector weight_A;       // a_e h_e
  Vector weight_B;       // b_e h_e
  Vector element_length;
  Real c_A = 0.0, C_A = 0.0, c_B = 0.0, C_B = 0.0;

  [[nodiscard]] Index interior_size() const { return mass.rows(); }
  [[nodiscard]] Index node_count() const { return mass_full.rows(); }
  [[nodiscard]] Index element_count() const { return strain_full.rows(); }
};

namespace detail {

inline SparseMatrix interior_block(const SparseMatrix& full) {
  const Index m = full.rows() - 2;
  return SparseMatrix(full.block(1, 1, m, m));
}

inline SparseMatrix interior_columns(const SparseMatrix& full) {
  const Index m = full.cols() - 2;
  return SparseMatrix(full.middleCols(1, m));
}

}  // namespace detail

/// Assembles mass and stiffness operators with exact elementwise integration.
inline FemMatrices assemble(const SpatialMesh& mesh, const CoefficientField& coeffs) {
  coeffs.validate(mesh);
  const Index n = mesh.node_count();
  const Index ne = mesh.element_count();

  FemMatrices out;
  out.c_A = coeffs.c_A;
  out.C_A = coeffs.C_A;
  out.c_B = coeffs.c_B;
  out.C_B = coeffs.C_B;
  out.weight_A.resize(ne);
  out.weight_B.resize(ne);
  out.element_length.resize(ne);

  std::vector<Eigen::Triplet<Real>> mass_t, kA_t, kB_t, k1_t, g_t;
  mass_t.reserve(static_cast<std::size_t>(4 * ne));
  for (Index e = 0; e < ne; ++e) {
    const Real h = mesh.element_length(e);
    VISCOMEM_REQUIRE(h > 0.0, InvalidInput, "assemble: non-positive element length");
    const Real a = coeffs.elasticity[static_cast<std::size_t>(e)];
    const Real b = coeffs.viscosity[static_cast<std::size_t>(e)];
    out.weight_A[e] = a * h;
    out.weight_B[e] = b * h;
    out.element_length[e] = h;
    const Index i = e;
    const Index j = e + 1;
    const auto add = [&](std::vector<Eigen::Triplet<Real>>& t, Real diag, Real off) {
      t.emplace_back(i, i, diag);
      t.emplace_back(j, j, diag);
      t.emplace_back(i, j, off);
      t.emplace_back(j, i, off);
    };
    add(mass_t, h / 3.0, h / 6.0);
    add(kA_t, a / h, -a / h);
    add(kB_t, b / h, -b / h);
    add(k1_t, 1.0 / h, -1.0 / h);
    g_t.emplace_back(e, i, -1.0 / h);
    g_t.emplace_back(e, j, 1.0 / h);
  }
  const auto build = [](Index rows, Index cols, const std::vector<Eigen::Triplet<Real>>& t) {
    SparseMatrix A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
  };
  out.mass_full = build(n, n, mass_t);
  out.stiff_A_full = build(n, n, kA_t);
  out.stiff_B_full = build(n, n, kB_t);
  out.stiff_unit_full = build(n, n, k1_t);
  out.strain_full = build(ne, n, g_t);

  out.mass = detail::interior_block(out.mass_full);
  out.stiff_A = detail::interior_block(out.stiff_A_full);
  out.stiff_B = detail::interior_block(out.stiff_B_full);
  out.stiff_unit = detail::interior_block(out.stiff_unit_full);
  out.strain = detail::interior_columns(out.strain_full);
  return out;
}

/// Full-length nodal field from interior values (boundary entries zero).
template <class Derived>
NodalFieldT<typename Derived::Scalar> embed(const Eigen::MatrixBase<Derived>& interior) {
  using Scalar = typename Derived::Scalar;
  NodalFieldT<Scalar> f;
  f.values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(interior.size() + 2);
  f.values.segment(1, interior.size()) = interior;
  f.homogeneous = true;
  return f;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> restrict_interior(const NodalFieldT<Scalar>& f) {
  return f.values.segment(1, f.values.size() - 2);
}

namespace detail {

template <class Scalar>
void check_field(const NodalFieldT<Scalar>& u, const FemMatrices& mats) {
  VISCOMEM_REQUIRE(u.values.size() == mats.node_count(), InvalidInput,
                   "nodal field size " + std::to_string(u.values.size()) +
                       " does not match mesh node count " + std::to_string(mats.node_count()));
  if (u.homogeneous) {
    VISCOMEM_REQUIRE(u.values[0] == Scalar(0) && u.values[u.values.size() - 1] == Scalar(0),
                     InvalidInput, "homogeneous nodal field has nonzero boundary values");
  }
}

template <class Scalar>
Real quadratic(const SparseMatrix& A, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u) {
  if constexpr (std::is_same_v<Scalar, Real>) {
    return u.dot(A * u);
  } else {
    return std::real(u.dot(A.template cast<Complex>() * u));
  }
}

}  // namespace detail

template <class Scalar>
Real norm_H(const NodalFieldT<Scalar>& u, const FemMatrices& mats) {
  detail::check_field(u, mats);
  return std::sqrt(std::max(0.0, detail::quadratic(mats.mass_full, u.values)));
}

/// ||e u|| with unit coefficient.
template <class Scalar>
Real strain_seminorm(const NodalFieldT<Scalar>& u, const FemMatrices& mats) {
  detail::check_field(u, mats);
  return std::sqrt(std::max(0.0, detail::quadratic(mats.stiff_unit_full, u.values)));
}

/// ||u||_V = (||u||^2 + ||e u||^2)^{1/2}.
template <class Scalar>
Real norm_V(const NodalFieldT<Scalar>& u, const FemMatrices& mats) {
  detail::check_field(u, mats);
  return std::sqrt(std::max(0.0, detail::quadratic(mats.mass_full, u.values) +
                                     detail::quadratic(mats.stiff_unit_full, u.values)));
}

/// Norms of a field sampled on a TimeGrid.
struct SpacetimeNorms {
  Real l2_0T_V = 0.0;
  Real l2_0T_H = 0.0;
  Real linf_etaT_V = 0.0;
  Real linf_etaT_H = 0.0;
};

/// L2(0,T) norms by the trapezoidal rule, L-infinity over grid points in [eta, T].
/// `series[k]` holds full nodal values at grid time t_k.
inline SpacetimeNorms spacetime_norms(std::span<const Vector> series, const TimeGrid& grid,
                                      Real eta, const FemMatrices& mats) {
  grid.validate();
  VISCOMEM_REQUIRE(eta >= 0.0 && eta < grid.T, InvalidInput,
                   "spacetime_norms: eta must lie in [0, T)");
  VISCOMEM_REQUIRE(static_cast<Index>(series.size()) == grid.point_count(), InvalidInput,
                   "spacetime_norms: series length does not match the time grid");
  SpacetimeNorms out;
  const Real dt = grid.dt();
  Real sumV = 0.0;
  Real sumH = 0.0;
  // grid points at or after eta, with a relative guard against rounding of k*dt
  const Real eta_guard = eta - 1e-12 * grid.T;
  for (Index k = 0; k < grid.point_count(); ++k) {
    const Vector& u = series[static_cast<std::size_t>(k)];
    VISCOMEM_REQUIRE(u.size() == mats.node_count(), InvalidInput,
                     "spacetime_norms: field size mismatch");
    const Real h2 = std::max(0.0, u.dot(mats.mass_full * u));
    const Real v2 = h2 + std::max(0.0, u.dot(mats.stiff_unit_full * u));
    const Real w = (k == 0 || k == grid.steps) ? 0.5 : 1.0;
    sumV += w * v2;
    sumH += w * h2;
    if (grid.time(k) >= eta_guard) {
      out.linf_etaT_V = std::max(out.linf_etaT_V, std::sqrt(v2));
      out.linf_etaT_H = std::max(out.linf_etaT_H, std::sqrt(h2));
    }
  }
  out.l2_0T_V = std::sqrt(dt * sumV);
  out.l2_0T_H = std::sqrt(dt * sumH);
  return out;
}

/// Smallest and largest eigenvalue of K u = lambda M u (both SPD).
struct EigenPair {
  Real value = 0.0;
  Vector vector;
};

/// Lowest eigenpair of K u = lambda M u by shifted-free inverse iteration.
/// The eigenvector is M-normalized.
inline EigenPair lowest_generalized_eigenpair(const SparseMatrix& K, const SparseMatrix& M,
                                              Real tol = 1e-14, int max_iter = 1000) {
  VISCOMEM_REQUIRE(K.rows() > 0 && K.rows() == M.rows(), InvalidInput,
                   "eigen-solve: constrained space is empty or sizes differ");
  Eigen::SimplicialLDLT<SparseMatrix> solver(K);
  if (solver.info() != Eigen::Success) {
    throw SolverFailure("eigen-solve: factorization of the stiffness operator failed");
  }
  // sin-like start vector overlaps the lowest mode for any positive coefficients
  const Index m = K.rows();
  Vector x(m);
  for (Index i = 0; i < m; ++i) {
    x[i] = std::sin(M_PI * static_cast<Real>(i + 1) / static_cast<Real>(m + 1));
  }
  x /= std::sqrt(x.dot(M * x));
  Real lambda = x.dot(K * x);
  for (int it = 0; it < max_iter; ++it) {
    Vector y = solver.solve(M * x);
    y /= std::sqrt(y.dot(M * y));
    const Real next = y.dot(K * y);
    x = y;
    if (std::abs(next - lambda) <= tol * std::abs(next)) {
      return {next, x};
    }
    lambda = next;
  }
  throw SolverFailure("eigen-solve: inverse iteration did not converge");
}

/// Discrete Korn-Poincare constant 1/sqrt(lambda_min) of K_1 u = lambda M u on
/// the constrained space.
inline Real poincare_constant(const FemMatrices& mats) {
  const EigenPair p = lowest_generalized_eigenpair(mats.stiff_unit, mats.mass);
  VISCOMEM_REQUIRE(p.value > 0.0, SolverFailure, "poincare_constant: non-positive eigenvalue");
  return 1.0 / std::sqrt(p.value);
}

/// Rigorous upper bound for the largest eigenvalue of K_c u = lambda M u with
/// elementwise coefficient c: the maximum of the element-level values 12 c_e / h_e^2.
inline Real max_eigenvalue_bound(const FemMatrices& mats, const Vector& element_weight) {
  Real bound = 0.0;
  for (Index e = 0; e < mats.element_count(); ++e) {
    const Real h = mats.element_length[e];
    bound = std::max(bound, 12.0 * (element_weight[e] / h) / (h * h));
  }
  return bound;
}

/// Full-length load vector (integral of f times each hat function), by a
/// 6-point Gauss rule per element.
inline Vector assemble_load(const SpatialMesh& mesh, const std::function<Real(Real)>& f) {
  Vector F = Vector::Zero(mesh.node_count());
  const auto& rule = gauss_rule<6>();
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Real x0 = mesh.node(e);
    const Real h = mesh.element_length(e);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Real xi = 0.5 * (rule.nodes[q] + 1.0);
      const Real w = 0.5 * h * rule.weights[q];
      const Real fx = f(x0 + xi * h);
      F[e] += w * fx * (1.0 - xi);
      F[e + 1] += w * fx * xi;
    }
  }
  return F;
}

/// Nodal interpolant of a function.
inline Vector interpolate(const SpatialMesh& mesh, const std::function<Real(Real)>& f) {
  Vector u(mesh.node_count());
  for (Index i = 0; i < mesh.node_count(); ++i) u[i] = f(mesh.node(i));
  return u;
}

/// Factorizations used for Riesz representatives of dual vectors on the
/// constrained space: the discrete H norm sqrt(F^T M^{-1} F) and the V'_0 norm
/// sqrt(F^T (M + K_1)^{-1} F).
class DualNorms {
public:
  explicit DualNorms(const FemMatrices& mats) {
    mass_.compute(mats.mass);
    VISCOMEM_REQUIRE(mass_.info() == Eigen::Success, SolverFailure,
                     "DualNorms: mass factorization failed");
    const SparseMatrix V = mats.mass + mats.stiff_unit;
    v_.compute(V);
    VISCOMEM_REQUIRE(v_.info() == Eigen::Success, SolverFailure,
                     "DualNorms: V-Gram factorization failed");
  }

  template <class Derived>
  [[nodiscard]] Real h_norm(const Eigen::MatrixBase<Derived>& F) const {
    return apply(mass_, F);
  }
  template <class Derived>
  [[nodiscard]] Real v_dual_norm(const Eigen::MatrixBase<Derived>& F) const {
    return apply(v_, F);
  }

private:
  template <class Derived>
  static Real apply(const Eigen::SimplicialLDLT<SparseMatrix>& s,
                    const Eigen::MatrixBase<Derived>& F) {
    if constexpr (std::is_same_v<typename Derived::Scalar, Real>) {
      const Vector y = s.solve(F.derived().eval());
      return std::sqrt(std::max(0.0, F.dot(y)));
    } else {
      const Vector re = s.solve(F.real().eval());
      const Vector im = s.solve(F.imag().eval());
      return std::sqrt(std::max(0.0, F.real().dot(re) + F.imag().dot(im)));
    }
  }

  Eigen::SimplicialLDLT<SparseMatrix> mass_;
  Eigen::SimplicialLDLT<SparseMatrix> v_;
};

}  // namespace viscomem
