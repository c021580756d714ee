#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "fel/lintheory.hpp"

using namespace fel;
using C = std::complex<double>;

namespace {

// Brute-force evaluation of omega^3 - a^2 omega - 1 in extended precision.
long double cubic_abs(C w, double a) {
  const std::complex<long double> z(w.real(), w.imag());
  const long double aa = static_cast<long double>(a) * a;
  return std::abs(z * z * z - aa * z - 1.0L);
}

}  // namespace

TEST(Dispersion, ColdBeamCubeRootsOfUnity) {
  const auto roots = solve_dispersion(EquilibriumProfile::cold_beam());
  ASSERT_EQ(roots.size(), 3u);
  const C expect[] = {std::polar(1.0, 2 * std::numbers::pi / 3), C(1, 0), std::polar(1.0, -2 * std::numbers::pi / 3)};
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(roots[i].omega - expect[i]), 1e-12) << i;
  EXPECT_EQ(roots[0].classification, Stability::unstable);
  EXPECT_EQ(roots[1].classification, Stability::neutral);
  EXPECT_EQ(roots[2].classification, Stability::damped);
  EXPECT_NEAR(growth_rate(roots), std::sqrt(3.0) / 2, 1e-12);
}

TEST(Dispersion, WaterbagRootsSatisfyCubic) {
  for (const double dp : {0.01, 0.1, 0.5, 1.0, 2.0, 2.7, 3.0, 5.0}) {
    const auto roots = solve_dispersion(EquilibriumProfile::waterbag(dp));
    C sum{}, prod{1.0, 0.0};
    for (const auto& r : roots) {
      EXPECT_LT(cubic_abs(r.omega, dp / 2), 1e-12L) << dp;
      EXPECT_LE(r.residual, 1e-12);
      sum += r.omega;
      prod *= r.omega;
    }
    // Vieta: no quadratic term, constant term -1.
    EXPECT_LT(std::abs(sum), 1e-12) << dp;
    EXPECT_LT(std::abs(prod - 1.0), 1e-12) << dp;
  }
}

TEST(Dispersion, SmallSpreadReference) {
  const auto roots = solve_dispersion(EquilibriumProfile::waterbag(0.1));
  EXPECT_NEAR(roots[0].omega.real(), -0.5004166665702965, 1e-12);
  EXPECT_NEAR(roots[0].omega.imag(), 0.865303715780755, 1e-12);
  EXPECT_NEAR(roots[1].omega.real(), 1.0008333331405928, 1e-12);
}

TEST(Dispersion, NewtonAgreesWithCompanion) {
  for (const double dp : {0.0, 0.1, 1.0, 2.5}) {
    const auto profile = dp > 0 ? EquilibriumProfile::waterbag(dp) : EquilibriumProfile::cold_beam();
    const auto a = solve_dispersion(profile);
    const auto b = solve_dispersion_newton(profile);
    for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(a[i].omega - b[i].omega), 1e-10) << dp;
  }
}

TEST(Dispersion, InstabilityThreshold) {
  // Three real roots once the discriminant 4a^6 - 27 turns positive.
  const double dp_crit = 2 * std::pow(27.0 / 4, 1.0 / 6);
  EXPECT_NEAR(dp_crit, 2.749459, 1e-6);
  EXPECT_GT(growth_rate(solve_dispersion(EquilibriumProfile::waterbag(dp_crit - 0.01))), 0.0);
  const auto stable = solve_dispersion(EquilibriumProfile::waterbag(dp_crit + 0.01));
  EXPECT_EQ(growth_rate(stable), 0.0);
  for (const auto& r : stable) EXPECT_EQ(r.classification, Stability::neutral);
}

TEST(Dispersion, GrowthRateContinuousAndDecreasing) {
  double prev = growth_rate(solve_dispersion(EquilibriumProfile::cold_beam()));
  for (double dp = 0.01; dp < 2.7; dp += 0.01) {
    const double g = growth_rate(solve_dispersion(EquilibriumProfile::waterbag(dp)));
    EXPECT_LE(g, prev + 1e-12) << dp;
    EXPECT_LT(prev - g, 0.05) << dp;
    prev = g;
  }
}

TEST(Dispersion, FunctionAndPolynomialConsistent) {
  const auto profile = EquilibriumProfile::waterbag(0.4);
  const C w(0.3, 0.7);
  const double a2 = 0.04;
  EXPECT_LT(std::abs(dispersion_function(profile, w) * (w * w - a2) - (w * (w * w - a2) - 1.0)), 1e-14);
  const auto c = dispersion_polynomial(profile);
  EXPECT_EQ(c(0), -1.0);
  EXPECT_NEAR(c(1), -a2, 1e-17);
  EXPECT_EQ(c(3), 1.0);
}

TEST(Dispersion, InvalidTolerance) {
  EXPECT_THROW(solve_dispersion(EquilibriumProfile::cold_beam(), 0.0), ValidationError);
}

TEST(Dispersion, Classify) {
  EXPECT_EQ(classify(C(0, 1e-3), 1e-6), Stability::unstable);
  EXPECT_EQ(classify(C(0, -1e-3), 1e-6), Stability::damped);
  EXPECT_EQ(classify(C(1, 1e-9), 1e-6), Stability::neutral);
  EXPECT_STREQ(to_string(Stability::unstable), "unstable");
}
