#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace hypok {
namespace {

using test::vec;

TEST(GaussianPoincare, LinearFunctionsAreExtremal) {
  const CounterRng rng(51);
  for (const auto& spec : test::presets()) {
    for (int i = 0; i < 5; ++i) {
      const Vec a = test::random_point(rng, 10 * i, spec.dim, 2.0);
      const double t = 0.1 + rng.uniform(10 * i + 5);
      const auto c = gaussian_poincare_check(spec, TestFunction::linear(a, 0.3), t, vec({0.2, -0.7}));
      const double exact = 2.0 * t * a.dot(gramians(spec, t).K_t * a);
      EXPECT_NEAR(c.lhs, exact, 1e-9 * exact);
      EXPECT_NEAR(c.rhs, exact, 1e-9 * exact);
    }
  }
}

TEST(GaussianPoincare, ConstantFunctionIsTrivial) {
  const auto c = gaussian_poincare_check(OperatorSpec::kolmogorov(1), TestFunction::constant(2, 3.0), 0.5, vec({0, 0}));
  EXPECT_NEAR(c.lhs, 0.0, 1e-13);
  EXPECT_NEAR(c.rhs, 0.0, 1e-13);
  EXPECT_TRUE(c.pass);
}

TEST(GaussianPoincare, RandomFunctionsOnEveryPreset) {
  const CounterRng rng(53);
  for (const auto& spec : test::presets()) {
    int failures = 0;
    for (int i = 0; i < 100; ++i) {
      const auto f = random_test_function(spec.dim, rng, i);
      const double t = 0.05 + 2.0 * rng.uniform(500 + i);
      const Vec x = test::random_point(rng, 1000 + 10 * i, spec.dim);
      const auto c = gaussian_poincare_check(spec, f, t, x);
      if (!c.pass) ++failures;
      EXPECT_NEAR(semigroup_variance(spec, f, t, x), c.lhs, 1e-9 * std::max(1.0, c.lhs));
    }
    EXPECT_EQ(failures, 0) << spec.name;
  }
}

TEST(GaussianPoincare, HeatConstantTwo) {
  // With Q = I, B = 0, t = 1, X = 0 the measure is N(0, 2I): Var f ≤ 2 E|∇f|².
  const auto spec = OperatorSpec::heat(2);
  const CounterRng rng(57);
  for (int i = 0; i < 20; ++i) {
    const auto c = gaussian_poincare_check(spec, random_test_function(2, rng, i), 1.0, Vec::Zero(2));
    EXPECT_TRUE(c.pass);
    EXPECT_LE(c.lhs, c.rhs);
  }
}

TEST(BakryEmery, LinearFunctionsAreExtremal) {
  for (const auto& spec : test::presets()) {
    const Vec a = vec({0.7, -1.1});
    const double tau = 0.6;
    const auto c = bakry_emery_check(spec, TestFunction::linear(a), tau, vec({0.4, 0.4}));
    const Vec g = gramians(spec, tau).exp_tB.transpose() * a;
    EXPECT_NEAR(c.lhs, g.dot(spec.Q * g), 1e-12);
    EXPECT_NEAR(c.rhs, c.lhs, 1e-9 * std::max(1.0, c.rhs));
  }
}

TEST(BakryEmery, StrictForHeatGaussian) {
  const auto c = bakry_emery_check(OperatorSpec::heat(2), TestFunction::isotropic_gaussian(2), 0.5, vec({0.3, 0.1}));
  EXPECT_GT(c.margin, 1e-6);
}

TEST(BakryEmery, RandomKolmogorov) {
  const CounterRng rng(59);
  const auto spec = OperatorSpec::kolmogorov(1);
  for (int i = 0; i < 10; ++i) {
    const double tau = 0.05 + 2.0 * rng.uniform(i);
    const auto c = bakry_emery_check(spec, random_test_function(2, rng, i), tau, test::random_point(rng, 100 + 10 * i, 2));
    EXPECT_TRUE(c.pass) << c.lhs << " > " << c.rhs;
  }
}

TEST(PseudoBallGeometry, HeatIsEuclidean) {
  const Vec x = vec({0.5, -0.5});
  const PseudoBall b(OperatorSpec::heat(2), x, 0.7, 0.49);
  EXPECT_NEAR(b.gauge(vec({1.2, -0.5})), 1.0, 1e-14);
  EXPECT_NEAR(b.volume, kPi * 0.49, 1e-14);
  const Vec v = vec({0.3, 0.4});
  EXPECT_NEAR(b.gauge(b.map(v)), v.norm(), 1e-14);
}

TEST(PseudoBallGeometry, AgreesWithKernelMembership) {
  const auto spec = OperatorSpec::kolmogorov(1);
  const Vec x = vec({0.2, 0.1});
  const double r = 0.8, t = 0.64;
  const PseudoBall b(spec, x, r, t);
  const CounterRng rng(61);
  for (int i = 0; i < 50; ++i) {
    const Vec y = b.center + test::random_point(rng, 10 * i, 2, 1.5);
    EXPECT_EQ(b.gauge(y) < 1.0, pseudo_ball_contains(spec, x, r, t, y));
  }
}

TEST(LocalPoincare, ZeroFunction) {
  LocalizedFunction f;
  f.bump = bump_in_pseudo_ball(OperatorSpec::heat(1), vec({0.0}), 1.0, vec({0.0}));
  f.modulator = TestFunction(1);
  const auto c = local_poincare_check(OperatorSpec::heat(1), vec({0.0}), 1.0, f);
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_EQ(c.rhs, 0.0);
  EXPECT_TRUE(c.pass);
}

TEST(LocalPoincare, RandomBumpsPass) {
  for (const auto& spec : {OperatorSpec::heat(2), OperatorSpec::kolmogorov(1), OperatorSpec::ornstein_uhlenbeck(1)}) {
    const CounterRng rng(67);
    const Vec x = Vec::Zero(spec.dim);
    QuadratureSpec q;
    q.mc_samples = 1 << 14;
    for (int i = 0; i < 10; ++i) {
      const auto f = random_local_bump(spec, x, 1.0, rng, i);
      const auto c = local_poincare_check(spec, x, 1.0, f, q);
      EXPECT_TRUE(c.pass) << spec.name << " i=" << i << " " << c.lhs << " > " << c.rhs;
    }
  }
}

TEST(LocalPoincare, RejectsBumpLeavingTheLargeBall) {
  const auto spec = OperatorSpec::heat(1);
  LocalizedFunction f;
  f.bump = CompactBump(vec({1.5}), 0.3, 0.8);
  f.modulator = TestFunction::constant(1, 1.0);
  EXPECT_THROW(local_poincare_check(spec, vec({0.0}), 1.0, f), PreconditionError);
}

TEST(PsiMonotonicity, EndpointsAndGrowth) {
  for (const auto& spec : test::presets()) {
    const auto f = TestFunction::gaussian(vec({0.3, -0.2}), Mat::Identity(2, 2) * 0.9);
    const auto f2 = TestFunction::gaussian(vec({0.3, -0.2}), Mat::Identity(2, 2) * 1.8);
    const Vec x = vec({0.1, 0.4});
    const double t = 1.2;
    const auto p = psi_monotonicity_probe(spec, f, t, x, 9);
    EXPECT_TRUE(p.nondecreasing) << spec.name;
    const double pt = exact_semigroup_oracle(spec, f, t, x);
    EXPECT_NEAR(p.at_zero, pt * pt, 1e-12);
    EXPECT_NEAR(p.at_t, exact_semigroup_oracle(spec, f2, t, x), 1e-10);
    for (std::size_t i = 1; i < p.psi.size(); ++i) EXPECT_GT(p.psi[i], p.psi[i - 1]) << spec.name;
  }
}

TEST(PsiMonotonicity, ConstantIsFlat) {
  const auto p = psi_monotonicity_probe(OperatorSpec::kolmogorov(1), TestFunction::constant(2, 2.0), 1.0, vec({0, 1}), 5);
  for (double v : p.psi) EXPECT_NEAR(v, 4.0, 1e-12);
  EXPECT_NEAR(p.at_zero, 4.0, 1e-12);
  EXPECT_NEAR(p.at_t, 4.0, 1e-12);
}

}  // namespace
}  // namespace hypok
