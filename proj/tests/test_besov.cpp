#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <utility>

namespace hypok {
namespace {

using test::vec;

// ∫∫ |1_E(x) − 1_E(y)| |x − y|^{−1−σ} over an interval of length L equals
// 4 L^{1−σ} / (σ (1 − σ)).
double interval_gagliardo(double len, double sigma) {
  return 4.0 * std::pow(len, 1.0 - sigma) / (sigma * (1.0 - sigma));
}

TEST(GagliardoOracle, IntervalClosedForm) {
  const auto e = BoxSet::interval(0.0, 1.0);
  EXPECT_NEAR(gagliardo_oracle(e, 1.0, 0.5), 16.0, 1e-8 * 16.0);
  EXPECT_NEAR(gagliardo_oracle(e, 2.0, 0.25), 4.0, 1e-8 * 4.0);
  EXPECT_NEAR(gagliardo_oracle(BoxSet::interval(2.0, 2.5), 1.0, 0.3), interval_gagliardo(0.5, 0.3), 1e-8);
}

TEST(GagliardoOracle, SquareConvergesUnderRefinement) {
  const BoxSet e(Vec::Zero(2), Vec::Ones(2));
  const double coarse = gagliardo_oracle(e, 1.0, 0.5, 16), fine = gagliardo_oracle(e, 1.0, 0.5, 32);
  EXPECT_NEAR(coarse / fine, 1.0, 1e-5);
}

TEST(BesovSeminorm, ZeroFunction) {
  const auto r = besov_seminorm(OperatorSpec::heat(1), TestFunction(1), 2.0, 0.5);
  EXPECT_EQ(r.value, 0.0);
}

TEST(BesovSeminorm, HeatFourierIdentity) {
  // 𝒩_{2,α}(f)² = (2Γ(1−α)/α) ‖(−Δ)^{α/2} f‖², and for f = exp(−y²) the
  // Fourier side is 2^{α−1/2} Γ(α+1/2).
  const auto spec = OperatorSpec::heat(1);
  const auto f = TestFunction::isotropic_gaussian(1);
  for (double alpha : {0.3, 0.5, 0.8}) {
    const double n2 = std::pow(besov_seminorm(spec, f, 2.0, alpha).value, 2);
    const double fourier = 2.0 * std::tgamma(1.0 - alpha) / alpha * std::pow(2.0, alpha - 0.5) * std::tgamma(alpha + 0.5);
    EXPECT_NEAR(n2 / fourier, 1.0, 1e-3) << "alpha=" << alpha;
  }
}

TEST(BesovSeminorm, HeatGagliardoFactor) {
  // The N = 2, p = 1 pair is left out: both sides take minutes there.
  for (const auto& [n, p] : {std::pair{1, 1.0}, std::pair{1, 2.0}, std::pair{2, 2.0}}) {
    const auto spec = OperatorSpec::heat(n);
    const auto f = TestFunction::gaussian(Vec::Constant(n, 0.1), Mat::Identity(n, n) * 1.3);
    const double alpha = 0.4;
    const double lhs = std::pow(besov_seminorm(spec, f, p, alpha).value, p);
    const double rhs = heat_besov_factor(n, p, alpha) * std::pow(gagliardo_oracle(f, p, alpha), p);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-3) << "n=" << n << " p=" << p;
  }
}

TEST(BesovSeminorm, TruncationBound) {
  for (const auto& spec : {OperatorSpec::heat(1), OperatorSpec::kolmogorov(1)}) {
    const auto f = TestFunction::isotropic_gaussian(spec.dim);
    const double p = 2.0, alpha = 0.6;
    const auto r = besov_seminorm(spec, f, p, alpha);
    const double bound = besov_truncation_constant(p, alpha) * (truncated_besov_seminorm(r, p) + lq_norm(f, p));
    EXPECT_LE(r.value, bound) << spec.name;
  }
}

TEST(IndicatorSeminorm, HeatIntervalClosedForm) {
  const auto spec = OperatorSpec::heat(1);
  for (double len : {1e-4, 1.0, 4.0}) {
    const double s = 0.25;
    const auto r = indicator_besov_l1(spec, BoxSet::interval(0.0, len), s);
    const double expected = heat_besov_factor(1, 1.0, 2.0 * s) * interval_gagliardo(len, 2.0 * s);
    EXPECT_NEAR(r.value / expected, 1.0, 0.02) << "len=" << len;
  }
}

TEST(IndicatorSeminorm, ShrinksLikeSquareRootOfLength) {
  const auto spec = OperatorSpec::heat(1);
  const double small = indicator_seminorm(spec, BoxSet::interval(0.0, 1e-4), 0.25).value;
  const double larger = indicator_seminorm(spec, BoxSet::interval(0.0, 1e-2), 0.25).value;
  EXPECT_NEAR(small / larger, 0.1, 1e-3);
}

TEST(IndicatorSeminorm, TranslationInvariance) {
  const auto spec = OperatorSpec::heat(1);
  const double a = indicator_besov_l1(spec, BoxSet::interval(0.0, 1.0), 0.25).value;
  const double b = indicator_besov_l1(spec, BoxSet::interval(3.0, 4.0), 0.25).value;
  EXPECT_NEAR(a, b, 1e-6 * a);
}

TEST(IndicatorSeminorm, FractionalPowerL1Norm) {
  const auto spec = OperatorSpec::heat(1);
  const auto e = BoxSet::interval(0.0, 1.0);
  const double s = 0.25;
  const double direct = fractional_indicator_l1(spec, e, s);
  const double via_perimeter = indicator_seminorm(spec, e, s).value;
  EXPECT_NEAR(direct / via_perimeter, 1.0, 0.01);
}

TEST(Perimeter, SquaredAndFirstPowerRoutesAgree) {
  const auto heat = s_perimeter(OperatorSpec::heat(1), BoxSet::interval(0.0, 1.0), 0.25);
  EXPECT_TRUE(heat.consistent) << heat.n2s_squared << " vs " << heat.n12s;
  const auto kolmo = s_perimeter(OperatorSpec::kolmogorov(1), BoxSet(Vec::Zero(2), Vec::Ones(2)), 0.25);
  EXPECT_TRUE(kolmo.consistent) << kolmo.n2s_squared << " +- " << kolmo.n2s_squared_stderr << " vs " << kolmo.n12s
                                << " +- " << kolmo.n12s_stderr;
}

TEST(BesovMapping, BothRegimes) {
  const auto spec = OperatorSpec::heat(1);
  const auto f = TestFunction::isotropic_gaussian(1);
  const auto a = besov_maps_to_lp_check(spec, f, 2.0, 0.6, 0.25);
  EXPECT_TRUE(a.pass) << a.lhs_norm << " > " << a.bound;
  const auto b = besov_maps_to_lp_check(spec, f, 1.0, 0.5, 0.25);
  EXPECT_TRUE(b.pass) << b.lhs_norm << " > " << b.bound;
  const auto z = besov_maps_to_lp_check(spec, TestFunction(1), 2.0, 0.6, 0.25);
  EXPECT_EQ(z.lhs_norm, 0.0);
  EXPECT_EQ(z.bound, 0.0);
  EXPECT_THROW(besov_maps_to_lp_check(spec, f, 2.0, 0.5, 0.25), DomainError);
  EXPECT_THROW(besov_maps_to_lp_check(OperatorSpec::ornstein_uhlenbeck(1), f, 2.0, 0.6, 0.25), DomainError);
}

}  // namespace
}  // namespace hypok
