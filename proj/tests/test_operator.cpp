#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace hypok {
namespace {

using test::vec;

TEST(MatrixExponential, ZeroNilpotentAndScalar) {
  EXPECT_TRUE(matrix_exponential(Mat::Zero(3, 3), 5.0).isIdentity(1e-15));

  Mat b(2, 2);
  b << 0, 0, 1, 0;
  Mat expected(2, 2);
  expected << 1, 0, 1, 1;
  EXPECT_LE((matrix_exponential(b, 1.0) - expected).norm(), 1e-15);

  const double t = 1.7;
  EXPECT_LE((matrix_exponential(-Mat::Identity(3, 3), t) - std::exp(-t) * Mat::Identity(3, 3)).norm(), 1e-15);
}

TEST(MatrixExponential, GroupLaw) {
  const CounterRng rng(7);
  for (int k = 0; k < 10; ++k) {
    Mat b(3, 3);
    for (int i = 0; i < 9; ++i) b(i / 3, i % 3) = 2.0 * rng.uniform(100 * k + i) - 1.0;
    const Mat lhs = matrix_exponential(b, 1.3);
    const Mat rhs = matrix_exponential(b, 0.4) * matrix_exponential(b, 0.9);
    EXPECT_LE((lhs - rhs).norm() / lhs.norm(), 1e-12);
  }
}

TEST(MatrixExponential, RejectsNonFinite) {
  Mat b = Mat::Zero(2, 2);
  b(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(matrix_exponential(b, 1.0), InputError);
}

TEST(OperatorSpec, RejectsInvalidDiffusion) {
  Mat q(2, 2);
  q << 1, 0.5, 0, 1;
  EXPECT_THROW(OperatorSpec(q, Mat::Zero(2, 2)), InputError);
  EXPECT_THROW(OperatorSpec(-Mat::Identity(2, 2), Mat::Zero(2, 2)), InputError);
  EXPECT_THROW(OperatorSpec(Mat::Identity(2, 2), Mat::Zero(3, 3)), InputError);
  EXPECT_DOUBLE_EQ(OperatorSpec::ornstein_uhlenbeck(3).trace_B, -3.0);
}

TEST(Gramians, HeatIsConstant) {
  const auto g = gramians(OperatorSpec::heat(3), 2.0);
  EXPECT_TRUE(g.K_t.isIdentity(1e-14));
  EXPECT_LE((g.C_t - 2.0 * Mat::Identity(3, 3)).norm(), 1e-14);
}

TEST(Gramians, KolmogorovClosedForm) {
  for (double t : {0.3, 0.7, 2.0, 5.0}) {
    const auto g = gramians(OperatorSpec::kolmogorov(1), t);
    Mat tk(2, 2);
    tk << t, t * t / 2, t * t / 2, t * t * t / 3;
    EXPECT_LE((t * g.K_t - tk).norm() / tk.norm(), 1e-13) << "t=" << t;
    EXPECT_NEAR(g.det_tK / (std::pow(t, 4) / 12.0), 1.0, 1e-12);
  }
}

TEST(Gramians, KolmogorovAgainstScalarQuadrature) {
  const auto spec = OperatorSpec::kolmogorov(1);
  const double t = 1.3;
  // ∫_0^t e^{-sB} Q e^{-sB^T} ds with e^{-sB} = [[1,0],[-s,1]].
  const auto& gl = gauss_legendre(20);
  Mat c = Mat::Zero(2, 2);
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double s = 0.5 * t * (gl.nodes[i] + 1.0);
    Mat e(2, 2);
    e << 1, 0, -s, 1;
    c += 0.5 * t * gl.weights[i] * e * spec.Q * e.transpose();
  }
  EXPECT_LE((gramians(spec, t).C_t - c).norm() / c.norm(), 1e-13);
}

TEST(Gramians, OrnsteinUhlenbeckScalar) {
  for (double t : {0.1, 1.0, 4.0}) {
    const auto g = gramians(OperatorSpec::ornstein_uhlenbeck(2), t);
    const double k = (1.0 - std::exp(-2.0 * t)) / (2.0 * t);
    EXPECT_LE((g.K_t - k * Mat::Identity(2, 2)).norm(), 1e-13 * k);
  }
}

TEST(Gramians, ConjugationAndDeterminantIdentities) {
  for (const auto& spec : test::presets()) {
    for (double t : {0.1, 1.0, 10.0}) {
      const auto g = gramians(spec, t, true);
      const Mat tk = t * g.K_t;
      EXPECT_LE((tk - g.exp_tB * g.C_t * g.exp_tB.transpose()).norm() / tk.norm(), 1e-12) << spec.name << " t=" << t;
      EXPECT_NEAR(g.det_tK / (std::exp(2.0 * t * spec.trace_B) * g.det_C), 1.0, 1e-12) << spec.name << " t=" << t;
    }
  }
}

TEST(Gramians, RejectsNonPositiveTime) {
  EXPECT_THROW(gramians(OperatorSpec::heat(1), 0.0), DomainError);
  EXPECT_THROW(gramians(OperatorSpec::heat(1), -1.0), DomainError);
}

TEST(Hypoellipticity, Examples) {
  EXPECT_TRUE(hypoellipticity_check(OperatorSpec::kolmogorov(1)).hypoelliptic);
  EXPECT_TRUE(hypoellipticity_check(OperatorSpec::kolmogorov(2)).hypoelliptic);
  Mat q = Mat::Zero(2, 2);
  q(0, 0) = 1.0;
  EXPECT_FALSE(hypoellipticity_check(OperatorSpec(q, Mat::Zero(2, 2))).hypoelliptic);
  Mat b(2, 2);
  b << 0.3, -2, 1, 0.5;
  EXPECT_TRUE(hypoellipticity_check(OperatorSpec(Mat::Identity(2, 2), b)).hypoelliptic);
}

TEST(Hypoellipticity, KalmanAndGramianTestsAgree) {
  std::vector<OperatorSpec> specs{OperatorSpec::heat(1), OperatorSpec::heat(3), OperatorSpec::kolmogorov(1),
                                  OperatorSpec::kolmogorov(2), OperatorSpec::ornstein_uhlenbeck(2)};
  Mat q = Mat::Zero(3, 3);
  q(0, 0) = 1.0;
  Mat chain = Mat::Zero(3, 3);
  chain(1, 0) = 1.0;
  chain(2, 1) = 1.0;
  specs.emplace_back(q, chain);  // three-step chain: hypoelliptic
  Mat broken = chain;
  broken(2, 1) = 0.0;
  specs.emplace_back(q, broken);  // last coordinate never reached
  specs.emplace_back(q, Mat::Zero(3, 3));
  Mat q2 = Mat::Zero(2, 2);
  q2(1, 1) = 2.0;
  Mat rot(2, 2);
  rot << 0, 1, -1, 0;
  specs.emplace_back(q2, rot);
  specs.emplace_back(Mat::Zero(2, 2), rot);
  Mat diag_b = Mat::Zero(2, 2);
  diag_b(0, 0) = 1.0;
  diag_b(1, 1) = 2.0;
  Mat q3(2, 2);
  q3 << 1, 1, 1, 1;
  specs.emplace_back(q3, diag_b);  // Q = vvᵀ, distinct eigenvalues: reachable
  specs.emplace_back(q3, Mat::Identity(2, 2));  // commuting drift: not reachable

  int positive = 0, negative = 0;
  for (const auto& spec : specs) {
    const auto r = hypoellipticity_check(spec);
    EXPECT_EQ(r.kalman_test, r.gramian_test) << "dim " << spec.dim;
    EXPECT_TRUE(r.tests_agree);
    (r.hypoelliptic ? positive : negative)++;
  }
  EXPECT_GE(positive, 3);
  EXPECT_GE(negative, 3);
}

TEST(LogdetIdentity, Residuals) {
  EXPECT_LE(logdet_derivative_identity(OperatorSpec::heat(2), 1.0).value(), 1e-8);
  EXPECT_LE(logdet_derivative_identity(OperatorSpec::kolmogorov(1), 0.7).value(), 1e-7);
  EXPECT_LE(logdet_derivative_identity(OperatorSpec::ornstein_uhlenbeck(2), 2.0).value(), 1e-8);
  EXPECT_THROW(logdet_derivative_identity(OperatorSpec::heat(1), 0.0), DomainError);
}

TEST(KernelConstants, PrefactorIdentity) {
  for (const auto& spec : test::presets()) {
    const KernelConstants c(spec.dim);
    for (double t : {0.5, 2.0}) {
      const auto g = gramians(spec, t);
      const double v = c.omega_N * std::sqrt(g.det_tK);
      const double expected = std::pow(4.0 * kPi * t, -0.5 * spec.dim) / std::sqrt(g.K_t.determinant());
      EXPECT_NEAR(c.c_N / v / expected, 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(KernelConstants(3).omega_N, 4.0 * kPi / 3.0, 1e-14);
}

TEST(TestFunction, GaussianAtCenter) {
  const auto f = TestFunction::isotropic_gaussian(3);
  EXPECT_DOUBLE_EQ(f.eval(Vec::Zero(3)), 1.0);
  EXPECT_LE(f.gradient(Vec::Zero(3)).norm(), 0.0);
}

TEST(TestFunction, GradientMatchesFiniteDifferences) {
  const CounterRng rng(11);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int dim = 1 + k % 3;
    const auto f = random_test_function(dim, rng, k);
    const Vec y = test::random_point(rng, 100000 + 10 * k, dim);
    const Vec g = f.gradient(y);
    const double h = 1e-6;
    for (int i = 0; i < dim; ++i) {
      Vec e = Vec::Zero(dim);
      e(i) = h;
      worst = std::max(worst, std::abs((f.eval(y + e) - f.eval(y - e)) / (2.0 * h) - g(i)));
    }
  }
  EXPECT_LE(worst, 1e-7);
}

TEST(TestFunction, ExactSemigroupOracle) {
  for (const auto& spec : test::presets()) {
    const Vec a = vec({0.3, -1.2}), x = vec({0.5, 0.25});
    const double t = 0.8;
    const auto g = gramians(spec, t);
    EXPECT_NEAR(exact_semigroup_oracle(spec, TestFunction::linear(a), t, x), a.dot(g.exp_tB * x), 1e-13);
  }
  for (double t : {0.1, 1.0, 3.0}) {
    const auto spec = OperatorSpec::heat(2);
    EXPECT_NEAR(exact_semigroup_oracle(spec, TestFunction::isotropic_gaussian(2), t, Vec::Zero(2)),
                1.0 / (1.0 + 4.0 * t), 1e-14);
  }
  const auto f = TestFunction::gaussian(vec({0.2, -0.4}), Mat::Identity(2, 2) * 0.7);
  const Vec x = vec({0.1, 0.3});
  const auto kolmo = OperatorSpec::kolmogorov(1);
  const double t0 = 1e-6;
  EXPECT_NEAR(exact_semigroup_oracle(kolmo, f, t0, x), f.eval(x) + t0 * f.generator_value(kolmo, x), 1e-11);
  const auto wide = TestFunction::isotropic_gaussian(2, 4.0);
  EXPECT_NEAR(exact_semigroup_oracle(kolmo, wide, t0, x), wide.eval(x), 1e-6);

  TestFunction cubic(1);
  cubic.add_term({1.0, Vec::Zero(1), Mat::Identity(1, 1), {3}});
  EXPECT_THROW(exact_semigroup_oracle(OperatorSpec::heat(1), cubic, 1.0, Vec::Zero(1)), UnsupportedError);
}

TEST(CompactBump, ShapeAndSupport) {
  const CompactBump b(vec({0.0, 0.0}), 0.5, 1.0);
  EXPECT_DOUBLE_EQ(b.eval(vec({0.2, 0.1})), 1.0);
  EXPECT_DOUBLE_EQ(b.eval(vec({1.0, 0.5})), 0.0);
  EXPECT_LE(b.gradient(vec({1.0, 0.5})).norm(), 0.0);
  EXPECT_LE(b.gradient(vec({0.1, 0.1})).norm(), 0.0);
  for (double r = 0.5; r <= 1.0; r += 0.05) {
    const double v = b.eval(vec({r, 0.0}));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(CompactBump(vec({0.0}), 1.0, 0.5), InputError);
}

}  // namespace
}  // namespace hypok
