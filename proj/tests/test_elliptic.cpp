#include "viscomem/elliptic.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace viscomem;

namespace {

// -(a u')' = 1 on (0, 1), u(0) = u(1) = 0, a piecewise constant with a jump at
// x = 0.5. Flux a u' = C - x, so u(x) = int_0^x (C - s) / a(s) ds with C fixed by
// u(1) = 0. Antiderivative of (C - s) / a on a piece: (C s - s^2 / 2) / a.
struct TwoPhaseExact {
  Real a_left, a_right, C;
  TwoPhaseExact(Real al, Real ar) : a_left(al), a_right(ar) {
    // u(1) = [C/2 - 1/8]/al + [C/2 - 3/8]/ar = 0
    C = (1.0 / (8.0 * al) + 3.0 / (8.0 * ar)) / (0.5 / al + 0.5 / ar);
  }
  [[nodiscard]] Real operator()(Real x) const {
    const auto F = [&](Real s) { return C * s - 0.5 * s * s; };
    if (x <= 0.5) return F(x) / a_left;
    return F(0.5) / a_left + (F(x) - F(0.5)) / a_right;
  }
};

}  // namespace

TEST(Stationary, ConstantLoadIsNodallyExact) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 10);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const Vector F = assemble_load(mesh, [](Real) { return 1.0; }).segment(1, 9);
  EllipticProblem prob{&m, [&](Real) { return F; }, {}};
  const NodalField u = solve_stationary(prob, 0.0);
  EXPECT_TRUE(u.homogeneous);
  for (Index i = 0; i < mesh.node_count(); ++i) {
    const Real x = mesh.node(i);
    EXPECT_NEAR(u.values[i], 0.5 * x * (1.0 - x), 1e-14);
  }
}

TEST(Stationary, DiscontinuousCoefficientIsNodallyExact) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 12);
  std::vector<Real> a(12);
  for (int e = 0; e < 12; ++e) a[static_cast<std::size_t>(e)] = e < 6 ? 1.0 : 5.0;
  const FemMatrices m = assemble(mesh, CoefficientField::from_values(a, std::vector<Real>(12, 1.0)));
  const Vector F = assemble_load(mesh, [](Real) { return 1.0; }).segment(1, 11);
  const NodalField u = solve_stationary({&m, [&](Real) { return F; }, {}}, 0.0);
  const TwoPhaseExact exact(1.0, 5.0);
  for (Index i = 0; i < mesh.node_count(); ++i) {
    EXPECT_NEAR(u.values[i], exact(mesh.node(i)), 1e-14);
  }
}

TEST(Stationary, ConstantBoundaryDataGivesConstantSolution) {
  const SpatialMesh mesh = SpatialMesh::uniform(2.0, 7);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 3.0, 1.0));
  const Vector zero = Vector::Zero(6);
  const NodalField u =
      solve_stationary({&m, [&](Real) { return zero; }, [](Real) { return Vector::Constant(8, 1.7); }}, 0.0);
  EXPECT_FALSE(u.homogeneous);
  EXPECT_LT((u.values - Vector::Constant(8, 1.7)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Stationary, ResidualAndLinearityInTime) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 20);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 2.0, 1.0));
  const Vector F = assemble_load(mesh, [](Real x) { return std::exp(x); }).segment(1, 19);
  const Vector z = interpolate(mesh, [](Real x) { return 1.0 + x; });
  const TimeGrid grid{1.0, 10, 0.0};
  const auto traj = solve_stationary_trajectory(
      {&m, [&](Real t) { return Vector(t * F); }, [&](Real t) { return Vector(t * z); }}, grid);
  ASSERT_EQ(traj.size(), 11u);
  const Vector u1 = traj.back().values;
  for (Index k = 0; k <= 10; ++k) {
    const Real t = grid.time(k);
    EXPECT_LT((traj[static_cast<std::size_t>(k)].values - t * u1).cwiseAbs().maxCoeff(), 1e-13);
  }
  // K_A (u - z) = F - K_A z on the interior
  const Vector v = u1 - z;
  const Vector res = m.stiff_A * v.segment(1, 19) - (F - (m.stiff_A_full * z).segment(1, 19));
  EXPECT_LT(res.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stationary, LaxMilgramStability) {
  const SpatialMesh mesh({0.0, 0.1, 0.25, 0.5, 0.55, 0.8, 1.0});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({0.5, 2, 1, 3, 0.7, 1}, {1, 1, 1, 1, 1, 1}));
  const Real cp = poincare_constant(m);
  const DualNorms duals(m);
  const StationarySolver solver(m);
  std::mt19937_64 rng(9);
  std::normal_distribution<Real> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector F(m.interior_size());
    for (Index i = 0; i < F.size(); ++i) F[i] = n(rng);
    const NodalField u = solver.solve(F, Vector());
    EXPECT_LE(norm_V(u, m), (cp * cp + 1.0) / m.c_A * duals.v_dual_norm(F) * (1.0 + 1e-12));
  }
}

TEST(Stationary, RejectsMismatchedLoad) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 4);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const StationarySolver s(m);
  EXPECT_THROW(s.solve(Vector::Zero(5), Vector()), InvalidInput);
  EXPECT_THROW(solve_stationary(EllipticProblem{}, 0.0), InvalidInput);
}

TEST(ComplexSolve, RejectsClosedHalfPlane) {
  EXPECT_THROW(ComplexFrequency(0.0, 1.0), InvalidInput);
  EXPECT_THROW(ComplexFrequency(Complex(-1.0, 0.0)), InvalidInput);
  EXPECT_NO_THROW(ComplexFrequency(1e-3, -5.0));
}

TEST(ComplexSolve, SingleNodeClosedForm) {
  // one interior node: (eps^2 s^2 m + kA + kB - kB / (beta eps s + 1)) v = f
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 2);
  const FemMatrices mats = assemble(mesh, CoefficientField::constant(mesh, 2.0, 3.0));
  const Real mm = 1.0 / 3.0, kA = 8.0, kB = 12.0;
  const Real eps = 0.3, beta = 0.7;
  const Complex s(1.5, -4.0);
  const Complex f(0.2, 1.1);
  const Complex expected = f / (eps * eps * s * s * mm + kA + kB - kB / (beta * eps * s + 1.0));
  ComplexNodalField rhs{ComplexVector::Zero(3), true};
  rhs.values[1] = f;
  const ComplexNodalField v = solve_complex(mats, ComplexFrequency(s), eps, beta, rhs);
  EXPECT_NEAR(std::abs(v.values[1] - expected), 0.0, 1e-15);
  EXPECT_EQ(v.values[0], Complex(0.0));
}

TEST(ComplexSolve, ResidualAgainstDenseOperatorAndCache) {
  const SpatialMesh mesh({0.0, 0.2, 0.3, 0.6, 0.9, 1.0});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({1, 2, 3, 2, 1}, {2, 1, 2, 1, 2}));
  const Real eps = 0.05, beta = 2.0;
  ComplexSolver solver(m, beta);
  std::mt19937_64 rng(2);
  std::normal_distribution<Real> n(0.0, 1.0);
  for (Real s2 : {-30.0, 0.0, 7.5}) {
    const ComplexFrequency s(0.5, s2);
    ComplexVector rhs(4);
    for (Index i = 0; i < 4; ++i) rhs[i] = Complex(n(rng), n(rng));
    const ComplexVector x = solver.solve(s, eps, rhs);
    const Eigen::MatrixXcd A =
        (eps * eps * s.s * s.s) * DenseMatrix(m.mass).cast<Complex>() +
        DenseMatrix(m.stiff_A).cast<Complex>() +
        (1.0 - 1.0 / (beta * eps * s.s + 1.0)) * DenseMatrix(m.stiff_B).cast<Complex>();
    EXPECT_LT((A * x - rhs).norm(), 1e-12 * rhs.norm() * A.norm());
    solver.solve(s, eps, rhs);
  }
  EXPECT_EQ(solver.cache_size(), 3u);
  EXPECT_EQ(solver.solve(ComplexFrequency(1.0, 1.0), eps, ComplexVector::Zero(4)).norm(), 0.0);
}

TEST(ComplexSolve, ConvergesToStationaryAsEpsVanishes) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 8);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const StationarySolver st(m);
  ComplexSolver cs(m, 1.0);
  const ComplexFrequency s(1.0, 3.0);
  const ComplexVector F = assemble_load(mesh, [](Real x) { return 1.0 + x; }).segment(1, 7).cast<Complex>();
  const ComplexVector v0 = st.solve_interior(F);
  Real prev = std::numeric_limits<Real>::infinity();
  for (Real eps : {0.1, 0.01, 0.001}) {
    const Real gap = (cs.solve(s, eps, F) - v0).norm();
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-2 * v0.norm());
}
