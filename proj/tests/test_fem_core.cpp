#include "viscomem/fem_core.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

using namespace viscomem;

namespace {

FemMatrices unit_mats(Index elements, Real a = 1.0, Real b = 1.0) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, elements);
  return assemble(mesh, CoefficientField::constant(mesh, a, b));
}

// Lowest eigenvalue of the P1 discretization of -u'' = lambda u on (0, 1),
// from the discrete sine modes: 6 (1 - cos(pi h)) / (h^2 (2 + cos(pi h))).
Real p1_lowest_eigenvalue(Index elements) {
  const Real h = 1.0 / static_cast<Real>(elements);
  const Real c = std::cos(M_PI * h);
  return 6.0 * (1.0 - c) / (h * h * (2.0 + c));
}

}  // namespace

TEST(SpatialMesh, RejectsBadNodes) {
  EXPECT_THROW(SpatialMesh({0.0, 1.0}), InvalidInput);
  EXPECT_THROW(SpatialMesh({0.0, 0.5, 0.5, 1.0}), InvalidInput);
  EXPECT_THROW(SpatialMesh({0.1, 0.5, 1.0}), InvalidInput);
  EXPECT_THROW(SpatialMesh::uniform(1.0, 1), InvalidInput);
  EXPECT_THROW(SpatialMesh::uniform(-1.0, 4), InvalidInput);
}

TEST(SpatialMesh, UniformGeometry) {
  const SpatialMesh mesh = SpatialMesh::uniform(2.0, 8);
  EXPECT_EQ(mesh.node_count(), 9);
  EXPECT_EQ(mesh.interior_count(), 7);
  EXPECT_DOUBLE_EQ(mesh.length(), 2.0);
  EXPECT_DOUBLE_EQ(mesh.max_element_length(), 0.25);
}

TEST(CoefficientField, ValidateRejectsOutOfBounds) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 4);
  CoefficientField c = CoefficientField::constant(mesh, 1.0, 1.0);
  c.elasticity[2] = 2.0;
  EXPECT_THROW(c.validate(mesh), InvalidInput);
  CoefficientField d = CoefficientField::constant(mesh, 1.0, 0.0);
  EXPECT_THROW(d.validate(mesh), InvalidInput);
}

TEST(Assemble, TwoElementHandComputed) {
  // h = 1/2: interior mass 2 h / 3, stiffness 2 a / h, strain rows +-1/h
  const FemMatrices m = unit_mats(2, 3.0, 5.0);
  ASSERT_EQ(m.interior_size(), 1);
  EXPECT_NEAR(m.mass.coeff(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.stiff_A.coeff(0, 0), 12.0, 1e-14);
  EXPECT_NEAR(m.stiff_B.coeff(0, 0), 20.0, 1e-14);
  EXPECT_NEAR(m.stiff_unit.coeff(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(m.strain.coeff(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(m.strain.coeff(1, 0), -2.0, 1e-15);
}

TEST(Assemble, MassIntegratesConstantsAndStiffnessAnnihilatesThem) {
  const SpatialMesh mesh({0.0, 0.1, 0.35, 0.4, 0.8, 1.3});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({1, 2, 3, 4, 5}, {1, 1, 2, 2, 3}));
  const Vector one = Vector::Ones(mesh.node_count());
  EXPECT_NEAR(one.dot(m.mass_full * one), 1.3, 1e-14);
  EXPECT_LT((m.stiff_A_full * one).norm(), 1e-13);
  EXPECT_LT((m.stiff_B_full * one).norm(), 1e-13);
  // x^T K_a x = int a dx for the exact interpolant of x
  const Vector x = interpolate(mesh, [](Real s) { return s; });
  const Real int_a = 1 * 0.1 + 2 * 0.25 + 3 * 0.05 + 4 * 0.4 + 5 * 0.5;
  EXPECT_NEAR(x.dot(m.stiff_A_full * x), int_a, 1e-13);
  // strain of x is one on every element
  EXPECT_LT((m.strain_full * x - Vector::Ones(5)).norm(), 1e-13);
}

TEST(Assemble, StiffnessEqualsStrainGram) {
  const SpatialMesh mesh({0.0, 0.2, 0.5, 0.6, 1.0});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({1, 2, 3, 4}, {4, 3, 2, 1}));
  const DenseMatrix G = DenseMatrix(m.strain);
  const DenseMatrix KA = G.transpose() * m.weight_A.asDiagonal() * G;
  const DenseMatrix KB = G.transpose() * m.weight_B.asDiagonal() * G;
  EXPECT_LT((KA - DenseMatrix(m.stiff_A)).norm(), 1e-12);
  EXPECT_LT((KB - DenseMatrix(m.stiff_B)).norm(), 1e-12);
}

TEST(Norms, SineInterpolantConvergesToContinuousNorm) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 400);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  NodalField u{interpolate(mesh, [](Real x) { return std::sin(M_PI * x); }), false};
  u.values[0] = 0.0;
  u.values[400] = 0.0;
  u.homogeneous = true;
  EXPECT_NEAR(norm_H(u, m), std::sqrt(0.5), 1e-4);
  EXPECT_NEAR(strain_seminorm(u, m), M_PI * std::sqrt(0.5), 1e-4);
  EXPECT_NEAR(norm_V(u, m), std::sqrt(0.5 + 0.5 * M_PI * M_PI), 1e-4);
}

TEST(Norms, HomogeneousFlagIsChecked) {
  const FemMatrices m = unit_mats(4);
  NodalField u{Vector::Ones(5), true};
  EXPECT_THROW(norm_H(u, m), InvalidInput);
  NodalField wrong{Vector::Zero(4), false};
  EXPECT_THROW(norm_V(wrong, m), InvalidInput);
}

TEST(Norms, ComplexNormIsRealPlusImaginary) {
  const FemMatrices m = unit_mats(6);
  std::mt19937_64 rng(3);
  std::normal_distribution<Real> n(0.0, 1.0);
  Vector re(7), im(7);
  for (Index i = 0; i < 7; ++i) {
    re[i] = n(rng);
    im[i] = n(rng);
  }
  ComplexNodalField z{ComplexVector(7), false};
  z.values.real() = re;
  z.values.imag() = im;
  const Real vr = norm_V(NodalField{re, false}, m);
  const Real vi = norm_V(NodalField{im, false}, m);
  EXPECT_NEAR(norm_V(z, m), std::hypot(vr, vi), 1e-12);
}

TEST(SpacetimeNorms, ConstantAndLinearInTime) {
  const FemMatrices m = unit_mats(8);
  const TimeGrid grid{2.0, 40, 0.5};
  const Vector u = Vector::LinSpaced(9, 0.0, 1.0);
  const Real h = std::sqrt(u.dot(m.mass_full * u));
  const Real v = std::sqrt(h * h + u.dot(m.stiff_unit_full * u));
  std::vector<Vector> series(41, u);
  const SpacetimeNorms c = spacetime_norms(series, grid, grid.eta, m);
  EXPECT_NEAR(c.l2_0T_H, std::sqrt(2.0) * h, 1e-13);
  EXPECT_NEAR(c.l2_0T_V, std::sqrt(2.0) * v, 1e-13);
  EXPECT_NEAR(c.linf_etaT_V, v, 1e-14);

  // t u: Linf over [eta, T] is attained at T; L2 by the trapezoid has error dt^2 T / 6
  for (Index k = 0; k <= 40; ++k) series[static_cast<std::size_t>(k)] = grid.time(k) * u;
  const SpacetimeNorms l = spacetime_norms(series, grid, 0.5, m);
  EXPECT_NEAR(l.linf_etaT_H, 2.0 * h, 1e-13);
  const Real exact2 = 8.0 / 3.0 * h * h;
  const Real trap2 = exact2 + grid.dt() * grid.dt() * 2.0 / 6.0 * h * h;
  EXPECT_NEAR(l.l2_0T_H * l.l2_0T_H, trap2, 1e-12);
  EXPECT_THROW(spacetime_norms(series, grid, 2.0, m), InvalidInput);
}

TEST(Eigen, LowestEigenvalueMatchesDiscreteSineMode) {
  for (Index n : {4, 16, 64}) {
    const FemMatrices m = unit_mats(n);
    const EigenPair p = lowest_generalized_eigenpair(m.stiff_unit, m.mass);
    EXPECT_NEAR(p.value, p1_lowest_eigenvalue(n), 1e-10 * p.value) << n;
    EXPECT_NEAR(p.vector.dot(m.mass * p.vector), 1.0, 1e-12);
    EXPECT_NEAR(poincare_constant(m), 1.0 / std::sqrt(p1_lowest_eigenvalue(n)), 1e-10);
  }
  // the discrete constant approaches 1 / pi from below
  EXPECT_LT(poincare_constant(unit_mats(64)), 1.0 / M_PI);
  EXPECT_NEAR(poincare_constant(unit_mats(256)), 1.0 / M_PI, 1e-5);
}

TEST(Eigen, PoincareInequalityOnRandomVectors) {
  const SpatialMesh mesh({0.0, 0.1, 0.3, 0.35, 0.7, 0.9, 1.0});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({1, 2, 1, 3, 1, 2}, {1, 1, 1, 1, 1, 1}));
  const Real cp = poincare_constant(m);
  std::mt19937_64 rng(11);
  std::normal_distribution<Real> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector u(m.interior_size());
    for (Index i = 0; i < u.size(); ++i) u[i] = n(rng);
    EXPECT_LE(u.dot(m.mass * u), cp * cp * u.dot(m.stiff_unit * u) * (1.0 + 1e-12));
  }
}

TEST(Eigen, MaxEigenvalueBoundDominatesDenseSpectrum) {
  const SpatialMesh mesh({0.0, 0.05, 0.3, 0.45, 0.5, 0.9, 1.0});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({2, 1, 3, 1, 4, 1}, {1, 2, 1, 2, 1, 2}));
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(DenseMatrix(m.stiff_A), DenseMatrix(m.mass));
  EXPECT_LE(es.eigenvalues().maxCoeff(), max_eigenvalue_bound(m, m.weight_A));
}

TEST(Load, ExactForLinearFunctions) {
  const SpatialMesh mesh({0.0, 0.25, 0.4, 1.0});
  // int x phi_i over [x_l, x_i] is h (x_l + 2 x_i) / 6, over [x_i, x_r] it is h (2 x_i + x_r) / 6
  const Vector F = assemble_load(mesh, [](Real x) { return x; });
  EXPECT_NEAR(F[1], 0.25 * (0.0 + 0.5) / 6.0 + 0.15 * (0.5 + 0.4) / 6.0, 1e-15);
  EXPECT_NEAR(F[2], 0.15 * (0.25 + 0.8) / 6.0 + 0.6 * (0.8 + 1.0) / 6.0, 1e-15);
  const Vector one = assemble_load(mesh, [](Real) { return 1.0; });
  EXPECT_NEAR(one.sum(), 1.0, 1e-15);
}

TEST(DualNorms, RieszRepresentativesRecoverPrimalNorms) {
  const FemMatrices m = unit_mats(10, 2.0, 1.0);
  const DualNorms d(m);
  std::mt19937_64 rng(5);
  std::normal_distribution<Real> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector u(m.interior_size());
    for (Index i = 0; i < u.size(); ++i) u[i] = n(rng);
    const Real h = std::sqrt(u.dot(m.mass * u));
    const SparseMatrix V = m.mass + m.stiff_unit;
    const Real v = std::sqrt(u.dot(V * u));
    EXPECT_NEAR(d.h_norm(Vector(m.mass * u)), h, 1e-12 * h);
    EXPECT_NEAR(d.v_dual_norm(Vector(V * u)), v, 1e-12 * v);
    // the V' norm never exceeds the H-dual norm
    const Vector F = m.mass * u;
    EXPECT_LE(d.v_dual_norm(F), d.h_norm(F) * (1.0 + 1e-12));
  }
}

TEST(TimeGrid, EndpointsAndValidation) {
  const TimeGrid g{3.0, 7, 0.0};
  EXPECT_DOUBLE_EQ(g.time(7), 3.0);
  EXPECT_EQ(g.point_count(), 8);
  EXPECT_THROW((TimeGrid{1.0, 0, 0.0}.validate()), InvalidInput);
  EXPECT_THROW((TimeGrid{1.0, 4, 1.0}.validate()), InvalidInput);
}
