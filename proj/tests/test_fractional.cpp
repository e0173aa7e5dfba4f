#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace hypok {
namespace {

using test::vec;

// (−Δ)^s exp(−y²) in one dimension. At y = 0 the Fourier integral has the
// closed form 4^s Γ(s + 1/2) / √π; the value at 0.3 was integrated separately.
TEST(FractionalPower, HeatFourierOracle) {
  const auto spec = OperatorSpec::heat(1);
  const auto f = TestFunction::isotropic_gaussian(1);
  EXPECT_NEAR(fractional_power(spec, f, 0.5, Vec::Zero(1)), 1.1283791670955126, 1e-5);
  for (double s : {0.1, 0.25, 0.75, 0.9})
    EXPECT_NEAR(fractional_power(spec, f, s, Vec::Zero(1)), std::pow(4.0, s) * std::tgamma(s + 0.5) / std::sqrt(kPi),
                1e-5)
        << "s=" << s;
  EXPECT_NEAR(fractional_power(spec, f, 0.25, vec({0.3})), 0.85245249147536741, 1e-5);
}

TEST(FractionalPower, MatchesRieszPrincipalValue) {
  for (int n : {1, 2, 3}) {
    const auto spec = OperatorSpec::heat(n);
    const auto f = TestFunction::gaussian(Vec::Constant(n, 0.2), Mat::Identity(n, n) * 0.8);
    const Vec x = Vec::Constant(n, -0.1);
    for (double s : {0.25, 0.5, 0.75})
      EXPECT_NEAR(fractional_power(spec, f, s, x), classical_frac_laplacian_oracle(spec, f, s, x), 1e-5)
          << "n=" << n << " s=" << s;
  }
}

TEST(FractionalPower, DilationScaling) {
  const auto spec = OperatorSpec::heat(2);
  const auto f = TestFunction::gaussian(vec({0.3, -0.2}), Mat::Identity(2, 2));
  const double lambda = 1.7, s = 0.4;
  const Vec x = vec({0.1, 0.25});
  EXPECT_NEAR(fractional_power(spec, f.dilated(lambda), s, x),
              std::pow(lambda, 2.0 * s) * fractional_power(spec, f, s, lambda * x), 1e-6);
}

TEST(FractionalPower, FarMassEntersOnlyThroughTheKernelTail) {
  const auto spec = OperatorSpec::heat(1);
  const double s = 0.9;
  const auto f = TestFunction::isotropic_gaussian(1);
  const auto far_part = TestFunction::gaussian(vec({50.0}), Mat::Identity(1, 1), 3.0);
  const double a = classical_frac_laplacian_oracle(spec, f, s, Vec::Zero(1));
  const double b = classical_frac_laplacian_oracle(spec, f + far_part, s, Vec::Zero(1));
  // Since the far term vanishes at 0, it changes the value by −c ∫ g(y) |y|^{−1−2s} dy.
  const double c = s * std::pow(4.0, s) * std::tgamma(0.5 + s) / (std::sqrt(kPi) * std::tgamma(1.0 - s));
  const Rule1D r = composite_legendre(40.0, 60.0, 8, 16);
  double tail = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    tail += r.weights[i] * far_part.eval(vec({r.nodes[i]})) * std::pow(r.nodes[i], -1.0 - 2.0 * s);
  EXPECT_GT(c * tail, 1e-6);
  EXPECT_NEAR(b - a, -c * tail, 1e-8);
}

TEST(FractionalPower, ApproachesGeneratorAsOrderTendsToOne) {
  for (const auto& spec : test::presets()) {
    const auto f = TestFunction::isotropic_gaussian(2, 1.5);
    const Vec x = vec({0.2, -0.3});
    EXPECT_NEAR(fractional_power(spec, f, 0.999, x), -f.generator_value(spec, x), 1e-2) << spec.name;
  }
}

TEST(FractionalPower, RejectsBadOrder) {
  const auto f = TestFunction::isotropic_gaussian(1);
  EXPECT_THROW(fractional_power(OperatorSpec::heat(1), f, 0.0, Vec::Zero(1)), DomainError);
  EXPECT_THROW(fractional_power(OperatorSpec::heat(1), f, 1.0, Vec::Zero(1)), DomainError);
  EXPECT_THROW(fractional_via_poisson(OperatorSpec::heat(1), f, 0.5, Vec::Zero(1)), DomainError);
}

TEST(PoissonRepresentation, AgreesWithBalakrishnan) {
  const auto f = TestFunction::isotropic_gaussian(1);
  EXPECT_NEAR(fractional_via_poisson(OperatorSpec::heat(1), f, 0.25, vec({0.3})),
              fractional_power(OperatorSpec::heat(1), f, 0.25, vec({0.3})), 1e-4);
  const auto g = TestFunction::isotropic_gaussian(2);
  const Vec x = vec({0.3, -0.1});
  EXPECT_NEAR(fractional_via_poisson(OperatorSpec::kolmogorov(1), g, 0.3, x),
              fractional_power(OperatorSpec::kolmogorov(1), g, 0.3, x), 1e-4);
  for (double s : {0.1, 0.25, 0.4})
    EXPECT_NEAR(fractional_via_poisson(OperatorSpec::ornstein_uhlenbeck(1), f, s, vec({0.3})),
                fractional_power(OperatorSpec::ornstein_uhlenbeck(1), f, s, vec({0.3})), 1e-4)
        << "s=" << s;
}

TEST(RieszPotential, NewtonianClosedForm) {
  // ℐ_1 exp(−|y|²)(0) in three dimensions is ∫ t^{-1/2} (1+4t)^{-3/2} dt / Γ(1/2) = 1/√π.
  const auto spec = OperatorSpec::heat(3);
  EXPECT_NEAR(riesz_potential(spec, TestFunction::isotropic_gaussian(3), 1.0, Vec::Zero(3)), 0.56418958354775629, 1e-4);
}

TEST(RieszPotential, InversionBothOrders) {
  for (const auto& spec : {OperatorSpec::heat(1), OperatorSpec::heat(3), OperatorSpec::kolmogorov(1)}) {
    const auto f = TestFunction::isotropic_gaussian(spec.dim);
    const Vec x = Vec::Constant(spec.dim, 0.2);
    const double alpha = 0.5;
    EXPECT_NEAR(potential_of_fractional(spec, f, alpha, x), f.eval(x), 1e-4) << spec.name;
    EXPECT_NEAR(fractional_of_potential(spec, f, alpha, x), f.eval(x), 1e-4) << spec.name;
  }
}

TEST(RieszPotential, RejectsNegativeTrace) {
  EXPECT_THROW(riesz_potential(OperatorSpec::ornstein_uhlenbeck(1), TestFunction::isotropic_gaussian(1), 0.5,
                               Vec::Zero(1)),
               DomainError);
}

TEST(SemigroupProperty, HalfPlusHalfIsTheGenerator) {
  const auto spec = OperatorSpec::heat(1);
  const auto f = TestFunction::isotropic_gaussian(1);
  const Vec x = vec({0.2});
  const auto r = semigroup_property_check(spec, f, 0.5, 0.5, x);
  // −Δ exp(−y²) = (2 − 4y²) exp(−y²).
  EXPECT_NEAR(r.lhs, (2.0 - 4.0 * 0.04) * std::exp(-0.04), 1e-12);
  EXPECT_LE(r.abs_diff, 1e-3);
}

TEST(SemigroupProperty, KolmogorovMixedOrders) {
  const auto r = semigroup_property_check(OperatorSpec::kolmogorov(1), TestFunction::isotropic_gaussian(2), 0.3, 0.4,
                                          vec({0.1, -0.2}));
  EXPECT_LE(r.abs_diff, 5e-3);
}

TEST(FractionalGrid, MatchesPointwise) {
  const auto spec = OperatorSpec::kolmogorov(1);
  const auto f = TestFunction::isotropic_gaussian(2);
  const std::vector<Vec> xs{vec({0.0, 0.0}), vec({0.5, -0.5}), vec({-1.0, 0.3})};
  const auto grid = fractional_power_on_grid(spec, f, 0.35, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(grid[i], fractional_power(spec, f, 0.35, xs[i]), 1e-12);
}

}  // namespace
}  // namespace hypok
