#pragma once

// Linear stability of homogeneous equilibria f0(p).
//
// Normal modes exp(i(theta - omega t)) satisfy omega = int eta(p)/(p - omega) dp
// with eta = f0'. For a waterbag of half-width a = dp/2 the integral reduces
// to 1/(omega^2 - a^2), giving the cubic omega^3 - a^2 omega - 1 = 0; the cold
// beam is a = 0. Im(omega) > 0 is growth under the exp(-i omega t) convention.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fel/errors.hpp"

namespace fel {

enum class ProfileKind { cold_beam, waterbag };

struct EquilibriumProfile {
  ProfileKind kind = ProfileKind::cold_beam;
  double delta_p = 0.0;

  static EquilibriumProfile cold_beam() { return {ProfileKind::cold_beam, 0.0}; }
  static EquilibriumProfile waterbag(double delta_p) {
    if (!(delta_p >= 0.0)) throw ValidationError("delta_p must be non-negative");
    return {ProfileKind::waterbag, delta_p};
  }

  double half_width() const { return kind == ProfileKind::cold_beam ? 0.0 : delta_p / 2; }
};

enum class Stability { unstable, neutral, damped };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::unstable: return "unstable";
    case Stability::neutral: return "neutral";
    case Stability::damped: return "damped";
  }
  return "?";
}

template <typename Scalar>
struct DispersionRoot {
  std::complex<Scalar> omega;
  Scalar residual{0};
  Stability classification = Stability::neutral;
};

/// Coefficients c0..c3 of c3 w^3 + c2 w^2 + c1 w + c0 = 0.
template <typename Scalar = double>
Eigen::Matrix<Scalar, 4, 1> dispersion_polynomial(const EquilibriumProfile& profile) {
  const Scalar a = static_cast<Scalar>(profile.half_width());
  Eigen::Matrix<Scalar, 4, 1> c;
  c << -1, -a * a, 0, 1;
  return c;
}

/// omega - int eta(p)/(p - omega) dp, in the reduced rational form.
template <typename Scalar>
std::complex<Scalar> dispersion_function(const EquilibriumProfile& profile, std::complex<Scalar> omega) {
  const Scalar a = static_cast<Scalar>(profile.half_width());
  return omega - Scalar{1} / (omega * omega - a * a);
}

/// |omega (omega^2 - a^2) - 1|.
template <typename Scalar>
Scalar dispersion_residual(const EquilibriumProfile& profile, std::complex<Scalar> omega) {
  const Scalar a = static_cast<Scalar>(profile.half_width());
  return std::abs(omega * (omega * omega - a * a) - Scalar{1});
}

template <typename Scalar>
Stability classify(std::complex<Scalar> omega, Scalar tol) {
  if (omega.imag() > tol) return Stability::unstable;
  if (omega.imag() < -tol) return Stability::damped;
  return Stability::neutral;
}

/// Newton iteration in the complex plane on an analytic function.
template <typename Scalar>
std::complex<Scalar> newton_root(const std::function<std::complex<Scalar>(std::complex<Scalar>)>& f,
                                 const std::function<std::complex<Scalar>(std::complex<Scalar>)>& df,
                                 std::complex<Scalar> seed, Scalar tol, int max_iter = 100) {
  auto z = seed;
  for (int i = 0; i < max_iter; ++i) {
    const auto fz = f(z);
    const auto dfz = df(z);
    if (dfz == std::complex<Scalar>{}) break;
    const auto dz = fz / dfz;
    z -= dz;
    if (std::abs(dz) <= tol * std::max<Scalar>(1, std::abs(z))) break;
  }
  return z;
}

namespace detail {

template <typename Scalar>
void polish_cubic(std::complex<Scalar>& w, Scalar a2) {
  for (int i = 0; i < 4; ++i) {
    const auto f = w * (w * w - a2) - Scalar{1};
    const auto df = Scalar{3} * w * w - a2;
    if (df == std::complex<Scalar>{}) return;
    const auto next = w - f / df;
    if (std::abs(next * (next * next - a2) - Scalar{1}) >= std::abs(f)) return;
    w = next;
  }
}

template <typename Scalar>
std::vector<DispersionRoot<Scalar>> finish(const EquilibriumProfile& profile,
                                           std::array<std::complex<Scalar>, 3> roots, Scalar tol) {
  std::vector<DispersionRoot<Scalar>> out;
  for (const auto& w : roots) {
    const Scalar r = dispersion_residual(profile, w);
    if (!(r <= tol)) {
      throw NumericalError("dispersion root failed back-substitution: residual " + std::to_string(r));
    }
    out.push_back({w, r, classify(w, std::sqrt(tol))});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.omega.imag() > y.omega.imag(); });
  return out;
}

}  // namespace detail

/// All three roots via the companion-matrix eigenvalues, Newton-polished and
/// checked by back-substitution. Sorted by Im(omega), descending.
template <typename Scalar = double>
std::vector<DispersionRoot<Scalar>> solve_dispersion(const EquilibriumProfile& profile, Scalar tol = 1e-12) {
  if (!(tol > 0)) throw ValidationError("tolerance must be positive");
  const auto c = dispersion_polynomial<Scalar>(profile);
  Eigen::Matrix<Scalar, 3, 3> companion = Eigen::Matrix<Scalar, 3, 3>::Zero();
  companion(1, 0) = 1;
  companion(2, 1) = 1;
  for (int i = 0; i < 3; ++i) companion(i, 2) = -c(i) / c(3);
  Eigen::EigenSolver<Eigen::Matrix<Scalar, 3, 3>> solver(companion, false);
  if (solver.info() != Eigen::Success) throw NumericalError("companion eigenvalue solve failed");
  const Scalar a2 = -c(1);
  std::array<std::complex<Scalar>, 3> roots;
  for (int i = 0; i < 3; ++i) {
    roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    detail::polish_cubic(roots[static_cast<std::size_t>(i)], a2);
  }
  return detail::finish(profile, roots, tol);
}

/// Same roots from Newton on omega - int eta/(p - omega), continued from the
/// cold beam roots (cube roots of unity) in small steps of the half-width so
/// each iteration starts next to the root it tracks. Kept for profiles
/// without a polynomial reduction.
template <typename Scalar = double>
std::vector<DispersionRoot<Scalar>> solve_dispersion_newton(const EquilibriumProfile& profile,
                                                            Scalar tol = 1e-12) {
  using C = std::complex<Scalar>;
  if (!(tol > 0)) throw ValidationError("tolerance must be positive");
  const Scalar a_end = static_cast<Scalar>(profile.half_width());
  const int steps = std::max(1, static_cast<int>(std::ceil(a_end / Scalar(0.02))));
  const Scalar third = static_cast<Scalar>(2.0943951023931957);  // 2 pi / 3
  std::array<C, 3> roots;
  for (int k = 0; k < 3; ++k) roots[static_cast<std::size_t>(k)] = std::polar(Scalar{1}, third * static_cast<Scalar>(k));

  Scalar a2{0};
  const std::function<C(C)> f = [&](C w) { return w - Scalar{1} / (w * w - a2); };
  const std::function<C(C)> df = [&](C w) {
    const C d = w * w - a2;
    return Scalar{1} + Scalar{2} * w / (d * d);
  };
  for (int i = 1; i <= steps; ++i) {
    const Scalar a = a_end * static_cast<Scalar>(i) / static_cast<Scalar>(steps);
    a2 = a * a;
    for (auto& w : roots) w = newton_root<Scalar>(f, df, w, tol * tol);
  }
  for (auto& w : roots) detail::polish_cubic(w, a2);
  return detail::finish(profile, roots, tol);
}

/// Largest field growth rate max(0, max Im omega); intensity grows at twice this.
template <typename Scalar>
Scalar growth_rate(const std::vector<DispersionRoot<Scalar>>& roots) {
  Scalar best{0};
  for (const auto& r : roots) best = std::max(best, r.omega.imag());
  return best;
}

}  // namespace fel
