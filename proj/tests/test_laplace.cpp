#include "viscomem/dynamic.hpp"
#include "viscomem/laplace.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace viscomem;

namespace {

Real bump(Real t) { return t <= 4.0 ? std::pow(std::sin(M_PI * t / 4.0), 2) : 0.0; }

}  // namespace

TEST(LineGrid, TrapezoidWeightsSumToLength) {
  const LineGrid g{1.0, 0.3, 50};
  Real sum = 0.0;
  for (Index k = -50; k <= 50; ++k) sum += g.weight(k);
  EXPECT_NEAR(sum, 2.0 * g.radius(), 1e-12);
  EXPECT_THROW((LineGrid{0.0, 0.1, 5}.validate()), InvalidInput);
  EXPECT_THROW((LineGrid{1.0, 0.1, 0}.validate()), InvalidInput);
}

TEST(Transform, ClosedFormsOnFiniteInterval) {
  const Real T = 3.0;
  for (Complex s : {Complex(1.0, 0.0), Complex(0.5, 7.0), Complex(2.0, -40.0), Complex(1.0, 300.0)}) {
    const Complex e = (1.0 - std::exp(-(s + 1.0) * T)) / (s + 1.0);
    EXPECT_LT(std::abs(laplace_transform([](Real t) { return std::exp(-t); }, T, s) - e), 1e-13);
    // int_0^T t exp(-s t) dt
    const Complex lin = (1.0 - std::exp(-s * T) * (1.0 + s * T)) / (s * s);
    EXPECT_LT(std::abs(laplace_transform([](Real t) { return t; }, T, s) - lin), 1e-12);
  }
  EXPECT_THROW(laplace_transform([](Real) { return 1.0; }, T, Complex(0.0, 1.0)), InvalidInput);
}

TEST(Transform, VectorLoadIsComponentwise) {
  const Vector v = Vector::LinSpaced(3, 1.0, 3.0);
  const ComplexFrequency s(1.0, 2.0);
  const ComplexVector hv =
      laplace_load([v](Real t) { return Vector(std::cos(t) * v); }, 2.0, s);
  const Complex scalar = laplace_transform([](Real t) { return std::cos(t); }, 2.0, s.s);
  EXPECT_LT((hv - scalar * v.cast<Complex>()).norm(), 1e-13);
}

TEST(Plancherel, ExponentialAndDiscontinuousSignals) {
  const PlancherelReport smooth = plancherel_check([](Real t) { return std::exp(-t); }, 10.0,
                                                   LineGrid{1.0, 0.25, 2000});
  EXPECT_LT(smooth.relative_gap, 1e-6);
  EXPECT_NEAR(smooth.time_side, 2.0 * M_PI * (1.0 - std::exp(-40.0)) / 4.0, 1e-12);
  // jump at T: the tail carries a visible share and still closes the identity
  const PlancherelReport jump = plancherel_check([](Real) { return 1.0; }, 2.0, LineGrid{1.0, 0.25, 800});
  EXPECT_GT(jump.tail, 1e-4 * jump.time_side);
  EXPECT_LT(jump.relative_gap, 1e-4);
}

TEST(Coercivity, BoxConstantsAndK) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 8);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const CoercivitySpec spec = make_coercivity_spec(m, 0.5);
  const Real cp = poincare_constant(m);
  EXPECT_NEAR(spec.a0, 1.0 / (cp * cp), 1e-12);
  EXPECT_NEAR(spec.b0, 2.0 / (cp * cp), 1e-12);
  EXPECT_DOUBLE_EQ(spec.c0, 2.0);
  EXPECT_DOUBLE_EQ(spec.c1, 2.0);
  EXPECT_TRUE(std::isinf(spec.gamma));  // a0 above 2 / (3 beta^2): empty box
  for (Real s2 : {0.0, 1.0, 10.0, 100.0}) {
    const ComplexFrequency s(1.0, s2);
    const Real expected = std::min(0.5, spec.alpha / (2.0 * std::sqrt(3.0) *
                                                      std::abs(s.s * (0.5 * s.s + 1.0))));
    EXPECT_DOUBLE_EQ(K_of_s(spec, s), expected);
  }
  CoercivitySpec bad = spec;
  bad.gamma = 0.0;
  EXPECT_THROW(K_of_s(bad, ComplexFrequency(1.0, 0.0)), InvalidInput);
}

TEST(Coercivity, GammaIsBelowSampledQuotient) {
  // small beta widens the box so the gamma branch is active
  CoercivitySpec spec;
  spec.beta = 0.2;
  spec.a0 = 1.0;
  spec.b0 = 1.5;
  spec.c0 = 1.5;
  spec.c1 = 3.0;
  const GammaEstimate g = estimate_gamma(spec);
  ASSERT_FALSE(g.empty_box);
  ASSERT_GT(g.value, 0.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  const Real upper = spec.box_upper();
  const Real R = spec.radius();
  int tested = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const Real a = spec.a0 + (upper - spec.a0) * u(rng);
    const Real b = spec.b0 + (upper - spec.b0) * u(rng);
    if (b < spec.c0 * a || b > spec.c1 * a) continue;
    const Complex z = std::polar(R * std::sqrt(u(rng)), M_PI * (u(rng) - 0.5));
    const Complex p = spec.beta * z * z * z + z * z + spec.beta * b * z + a;
    EXPECT_GE(std::abs(p) / (a * std::abs(spec.beta * z + 1.0)), g.value);
    ++tested;
  }
  EXPECT_GT(tested, 1000);
  spec.a0 = 100.0;
  EXPECT_TRUE(estimate_gamma(spec).empty_box);
}

TEST(Coercivity, FormMatchesOperatorAndInequalityHolds) {
  const SpatialMesh mesh({0.0, 0.1, 0.4, 0.5, 0.8, 1.0});
  const FemMatrices m = assemble(mesh, CoefficientField::from_values({1, 2, 1, 3, 1}, {1, 1, 2, 1, 1}));
  const Real beta = 0.5, eps = 0.1;
  const ComplexFrequency s(1.0, -3.0);
  ComplexVector psi(4);
  psi << Complex(1, 2), Complex(-1, 0.5), Complex(0, 1), Complex(2, -1);
  const Eigen::MatrixXcd S = Eigen::MatrixXcd(frequency_operator(m, s.s, eps, beta));
  EXPECT_LT(std::abs(frequency_form(m, s.s, eps, beta, psi) - psi.dot(S * psi)), 1e-12);
  const CoercivitySpec spec = make_coercivity_spec(m, beta);
  for (Real e : {0.5, 0.1, 0.02}) {
    const CoercivityReport rep = verify_coercivity(spec, m, s, e, 200, 17);
    EXPECT_EQ(rep.passed, rep.trials);
    EXPECT_GE(rep.min_margin, 0.0);
  }
  EXPECT_THROW(verify_coercivity(spec, m, s, 1.0, 1, 1), InvalidInput);
}

TEST(LineDistance, DecreasesWithEpsAndRejectsShortGrids) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 4);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const LineProblem prob{&m, 0.5,
                         SeparableLoad{bump, assemble_load(mesh, [](Real x) { return 1.0 + x; }).segment(1, 3), 4.0}};
  Real prev = std::numeric_limits<Real>::infinity();
  for (Real eps : {0.2, 0.1}) {
    const LineDistance d = line_distance(eps, LineGrid{1.0, 0.5, 1500}, prob, 2);
    EXPECT_LT(d.value, prev);
    EXPECT_LE(d.tail_bound, 0.1 * d.value);
    EXPECT_NEAR(d.half_line, d.value, 1e-10 * d.value);  // conjugate symmetry
    prev = d.value;
  }
  EXPECT_THROW(line_distance(0.2, LineGrid{1.0, 0.5, 10}, prob), InvalidInput);
}

TEST(LineDistance, EqualsWeightedTimeDomainDistanceByPlancherel) {
  // 2 pi int exp(-2 t) |u_eps - u_0|_V^2 dt from the time-stepping solution with
  // zero history, against the line integral of the transformed solutions.
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 4);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const Vector prof = assemble_load(mesh, [](Real x) { return 1.0 + x; }).segment(1, 3);
  const Real eps = 0.2, beta = 0.5, Tend = 14.0;
  const LineProblem prob{&m, beta, SeparableLoad{bump, prof, 4.0}};
  const LineDistance ld = line_distance(eps, LineGrid{1.0, 0.25, 6000}, prob, 2);

  ProblemData d;
  d.eps = eps;
  d.beta = beta;
  d.T = Tend;
  d.g.value = [prof](Real t) { return Vector(bump(t) * prof); };
  d.g.rate = [prof](Real t) {
    return Vector((t <= 4.0 ? M_PI / 4.0 * std::sin(M_PI * t / 2.0) : 0.0) * prof);
  };
  d.reduced = ReducedData::at_rest(m, beta * eps);
  const TimeGrid grid{Tend, 28000, 0.0};
  const IntegrationResult r = integrate(d, m, grid);
  const StationarySolver st(m);
  const SparseMatrix V = m.mass + m.stiff_unit;
  Real acc = 0.0;
  for (Index k = 0; k <= grid.steps; ++k) {
    const Real t = grid.time(k);
    const Vector diff = r.trajectory.states[static_cast<std::size_t>(k)].v - st.solve_interior(Vector(bump(t) * prof));
    const Real w = (k == 0 || k == grid.steps) ? 0.5 : 1.0;
    acc += w * std::exp(-2.0 * t) * diff.dot(V * diff);
  }
  const Real time_side = 2.0 * M_PI * grid.dt() * acc;
  EXPECT_NEAR(ld.value, time_side, 1e-3 * time_side);
}

TEST(Bromwich, SingleModeInversionApproximatesTimeSolution) {
  const SpatialMesh mesh = SpatialMesh::uniform(1.0, 2);
  const FemMatrices m = assemble(mesh, CoefficientField::constant(mesh, 1.0, 1.0));
  const Real eps = 0.3, beta = 0.5;
  const SeparableLoad load{bump, Vector::Constant(1, 1.0), 4.0};
  ProblemData d;
  d.eps = eps;
  d.beta = beta;
  d.T = 2.0;
  d.g.value = [](Real t) { return Vector::Constant(1, bump(t)); };
  d.reduced = ReducedData::at_rest(m, beta * eps);
  const IntegrationResult r = integrate(d, m, TimeGrid{2.0, 4000, 0.0});
  const Real exact = r.trajectory.states.back().v[0];
  const Real inv = bromwich_single_mode(m, eps, beta, load, LineGrid{1.0, 0.1, 5000}, 2.0);
  EXPECT_NEAR(inv, exact, 1e-3 * std::abs(exact));
}
