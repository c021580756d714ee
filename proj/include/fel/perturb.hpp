#pragma once

// Short-time closed forms for the bunched waterbag.
//
// Each observable is an Expansion: a truncated power series in t together
// with the order of the neglected remainder, so comparisons can scale their
// tolerances with t^order. Evaluations outside the validated parameter range
// (alpha <= pi/2, I0/N <= 0.8) succeed and raise a warning flag.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fel/core.hpp"
#include "fel/errors.hpp"

namespace fel {

template <typename Scalar>
struct Term {
  int power = 0;
  Scalar coefficient{0};
};

template <typename Scalar>
struct Prediction {
  Scalar value{0};
  int truncation_order = 0;
  bool outside_validity = false;
};

template <typename Scalar>
struct Expansion {
  std::vector<Term<Scalar>> terms;  // strictly increasing powers
  int truncation_order = 0;         // remainder is O(t^truncation_order)
  std::string validity_note;

  Scalar operator()(Scalar t) const {
    Scalar acc{0};
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) acc += it->coefficient * std::pow(t, it->power);
    return acc;
  }

  Scalar derivative(Scalar t) const {
    Scalar acc{0};
    for (const auto& term : terms) {
      if (term.power > 0) acc += term.coefficient * static_cast<Scalar>(term.power) * std::pow(t, term.power - 1);
    }
    return acc;
  }

  Scalar coefficient(int power) const {
    for (const auto& term : terms) {
      if (term.power == power) return term.coefficient;
    }
    return Scalar{0};
  }
};

inline constexpr double kValidityAlphaMax = 1.5707963267948966;  // pi/2
inline constexpr double kValidityIntensityMax = 0.8;
inline constexpr double kSmallSeedThreshold = 1e-6;

inline bool outside_validity(const WaterbagSpec& spec) {
  return spec.alpha > kValidityAlphaMax + 1e-15 || spec.i0_norm > kValidityIntensityMax;
}

inline std::string validity_note(const WaterbagSpec& spec) {
  if (!outside_validity(spec)) return {};
  return "outside validated range (alpha <= pi/2, I0/N <= 0.8): higher-order corrections expected";
}

/// sin(alpha)/alpha, with the alpha -> 0 limit.
template <typename Scalar>
Scalar s_alpha(Scalar alpha) {
  if (std::abs(alpha) < Scalar(1e-8)) return Scalar{1};
  return std::sin(alpha) / alpha;
}

namespace detail {

template <typename Scalar>
Expansion<Scalar> make(std::vector<Term<Scalar>> terms, int order, const WaterbagSpec& spec) {
  return {std::move(terms), order, validity_note(spec)};
}

template <typename Scalar>
Prediction<Scalar> at(const Expansion<Scalar>& e, Scalar t, const WaterbagSpec& spec) {
  return {e(t), e.truncation_order, outside_validity(spec)};
}

template <typename Scalar>
struct Params {
  Scalar alpha, s, a0, dp;
  explicit Params(const WaterbagSpec& spec)
      : alpha(static_cast<Scalar>(spec.alpha)),
        s(s_alpha(static_cast<Scalar>(spec.alpha))),
        a0(std::sqrt(static_cast<Scalar>(spec.i0_norm))),
        dp(static_cast<Scalar>(spec.delta_p)) {}
};

}  // namespace detail

enum class Side { plus, minus };

inline double sign_of(Side side) { return side == Side::plus ? 1.0 : -1.0; }

/// A_x = A0 + s t + O(t^4).
template <typename Scalar = double>
Expansion<Scalar> field_x_expansion(const WaterbagSpec& spec) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  return detail::make<Scalar>({{0, q.a0}, {1, q.s}}, 4, spec);
}

/// A_y = (A0/15) c t^3 + (s/60) c t^4 + O(t^5), c = 4 - 8s + 9s^2.
template <typename Scalar = double>
Expansion<Scalar> field_y_expansion(const WaterbagSpec& spec) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  const Scalar c = 4 - 8 * q.s + 9 * q.s * q.s;
  return detail::make<Scalar>({{3, q.a0 / 15 * c}, {4, q.s / 60 * c}}, 5, spec);
}

/// Lateral edges: Theta_pm = pm alpha - A0 cos(alpha) t^2 - (s/3) cos(alpha) t^3 + O(t^4).
template <typename Scalar = double>
Expansion<Scalar> theta_boundary_expansion(const WaterbagSpec& spec, Side side) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  const Scalar c = std::cos(q.alpha);
  return detail::make<Scalar>(
      {{0, static_cast<Scalar>(sign_of(side)) * q.alpha}, {2, -q.a0 * c}, {3, -q.s * c / 3}}, 4, spec);
}

/// v_pm = pm dp/2 - 2 A0 t - s t^2 + O(t^3).
template <typename Scalar = double>
Expansion<Scalar> v_expansion(const WaterbagSpec& spec, Side side) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  return detail::make<Scalar>(
      {{0, static_cast<Scalar>(sign_of(side)) * q.dp / 2}, {1, -2 * q.a0}, {2, -q.s}}, 3, spec);
}

/// u = (6/alpha^2)(1 - s) A0 t + (3/alpha^2) s (1 - s) t^2 + O(t^3).
template <typename Scalar = double>
Expansion<Scalar> u_expansion(const WaterbagSpec& spec) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  const Scalar a2 = q.alpha * q.alpha;
  return detail::make<Scalar>({{1, 6 / a2 * (1 - q.s) * q.a0}, {2, 3 / a2 * q.s * (1 - q.s)}}, 3, spec);
}

/// I/N = I0 + 2 sqrt(I0) s t + s^2 t^2 + O(t^4).
template <typename Scalar = double>
Expansion<Scalar> intensity_expansion(const WaterbagSpec& spec) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  return detail::make<Scalar>(
      {{0, static_cast<Scalar>(spec.i0_norm)}, {1, 2 * q.a0 * q.s}, {2, q.s * q.s}}, 4, spec);
}

/// Energy dispersion D(t). Above `small_seed_threshold`:
///   D = dp^2/12 + (16/5) I0^2 ((s-1)^2/s^2) [(t/Tc)^2 + (t/Tc)^3],
/// written as (16/5)(s-1)^2 (I0 t^2 + sqrt(I0) s t^3) so it stays finite at
/// s = 0. Below it, the explicit small-seed form
///   D = dp^2/12 + (1/5)(4s^4 - 8s^3 + 4s^2) t^4 + O(t^5).
template <typename Scalar = double>
Expansion<Scalar> dispersion_expansion(const WaterbagSpec& spec,
                                       double small_seed_threshold = kSmallSeedThreshold) {
  validate_spec(spec);
  const detail::Params<Scalar> q(spec);
  const Scalar d0 = q.dp * q.dp / 12;
  const Scalar sm1 = q.s - 1;
  if (spec.i0_norm < small_seed_threshold) {
    const Scalar s2 = q.s * q.s;
    return detail::make<Scalar>({{0, d0}, {4, (4 * s2 * s2 - 8 * s2 * q.s + 4 * s2) / 5}}, 5, spec);
  }
  const Scalar i0 = static_cast<Scalar>(spec.i0_norm);
  const Scalar k = Scalar(16) / 5 * sm1 * sm1;
  return detail::make<Scalar>({{0, d0}, {2, k * i0}, {3, k * q.a0 * q.s}}, 4, spec);
}

template <typename Scalar = double>
Prediction<Scalar> field_x(Scalar t, const WaterbagSpec& spec) {
  return detail::at(field_x_expansion<Scalar>(spec), t, spec);
}
template <typename Scalar = double>
Prediction<Scalar> field_y(Scalar t, const WaterbagSpec& spec) {
  return detail::at(field_y_expansion<Scalar>(spec), t, spec);
}
template <typename Scalar = double>
Prediction<Scalar> theta_boundary(Scalar t, const WaterbagSpec& spec, Side side) {
  return detail::at(theta_boundary_expansion<Scalar>(spec, side), t, spec);
}
template <typename Scalar = double>
Prediction<Scalar> v_pm(Scalar t, const WaterbagSpec& spec, Side side) {
  return detail::at(v_expansion<Scalar>(spec, side), t, spec);
}
template <typename Scalar = double>
Prediction<Scalar> u_coeff(Scalar t, const WaterbagSpec& spec) {
  return detail::at(u_expansion<Scalar>(spec), t, spec);
}
template <typename Scalar = double>
Prediction<Scalar> intensity(Scalar t, const WaterbagSpec& spec) {
  return detail::at(intensity_expansion<Scalar>(spec), t, spec);
}
template <typename Scalar = double>
Prediction<Scalar> energy_dispersion(Scalar t, const WaterbagSpec& spec,
                                     double small_seed_threshold = kSmallSeedThreshold) {
  return detail::at(dispersion_expansion<Scalar>(spec, small_seed_threshold), t, spec);
}

/// Parabolic boundary P_pm(theta, t) = u(t) theta^2 + v_pm(t).
template <typename Scalar = double>
Prediction<Scalar> p_boundary(Scalar theta, Scalar t, const WaterbagSpec& spec, Side side) {
  const auto u = u_coeff<Scalar>(t, spec);
  const auto v = v_pm<Scalar>(t, spec, side);
  return {u.value * theta * theta + v.value, std::min(u.truncation_order, v.truncation_order),
          u.outside_validity};
}

/// T_c = sqrt(I0)/s. Infinite when s = 0.
template <typename Scalar = double>
Scalar characteristic_time(const WaterbagSpec& spec) {
  validate_spec(spec);
  if (!(spec.i0_norm > 0.0)) throw ValidationError("gain undefined for zero seed");
  const Scalar s = s_alpha(static_cast<Scalar>(spec.alpha));
  const Scalar a0 = std::sqrt(static_cast<Scalar>(spec.i0_norm));
  if (s == 0) return std::numeric_limits<Scalar>::infinity();
  return a0 / s;
}

/// G = I/I0 = (1 + t/Tc)^2, truncation O((t/Tc)^3).
template <typename Scalar = double>
Prediction<Scalar> gain(Scalar t, const WaterbagSpec& spec) {
  const Scalar tc = characteristic_time<Scalar>(spec);
  const Scalar x = 1 + t / tc;
  return {x * x, 3, outside_validity(spec)};
}

/// Inverse of `gain`: t* = Tc (sqrt(G*) - 1).
template <typename Scalar = double>
Scalar time_to_gain(Scalar g_star, const WaterbagSpec& spec) {
  if (!(g_star >= 1)) throw ValidationError("target gain must be at least 1");
  const Scalar tc = characteristic_time<Scalar>(spec);
  const Scalar r = std::sqrt(g_star) - 1;
  if (r == 0) return Scalar{0};
  return tc * r;
}

/// b_k = sin(k alpha)/(k alpha) + O(t^3).
template <typename Scalar = double>
Prediction<Scalar> bunching_prediction(int k, const WaterbagSpec& spec) {
  validate_spec(spec);
  if (k < 1) throw ValidationError("bunching harmonic must be at least 1");
  return {s_alpha(static_cast<Scalar>(k) * static_cast<Scalar>(spec.alpha)), 3, outside_validity(spec)};
}

/// Total-momentum bookkeeping of the contour model:
///   I0 - [A_x^2 + A_y^2 + f0 ((Th+^3 - Th-^3) u dv/3 + (Th+ - Th-) vbar dv/2)]
/// evaluated on the expansions above. Vanishes as t -> 0 faster than t^3.
template <typename Scalar = double>
Scalar momentum_bookkeeping_residual(Scalar t, const WaterbagSpec& spec) {
  const Scalar f0 = static_cast<Scalar>(spec.density());
  const Scalar ax = field_x<Scalar>(t, spec).value;
  const Scalar ay = field_y<Scalar>(t, spec).value;
  const Scalar tp = theta_boundary<Scalar>(t, spec, Side::plus).value;
  const Scalar tm = theta_boundary<Scalar>(t, spec, Side::minus).value;
  const Scalar vp = v_pm<Scalar>(t, spec, Side::plus).value;
  const Scalar vm = v_pm<Scalar>(t, spec, Side::minus).value;
  const Scalar u = u_coeff<Scalar>(t, spec).value;
  const Scalar vbar = vp + vm;
  const Scalar dv = vp - vm;
  const Scalar particles =
      f0 * ((tp * tp * tp - tm * tm * tm) * u * dv / 3 + (tp - tm) * vbar * dv / 2);
  return static_cast<Scalar>(spec.i0_norm) - (ax * ax + ay * ay + particles);
}

/// Energy bookkeeping of the contour model:
///   dp^2/24 - { (f0/6)[(3/5)(Th+^5 - Th-^5) u^2 dv + (Th+^3 - Th-^3) u vbar dv
///               + (Th+ - Th-)(dv/4)(dv^2 + 3 vbar^2)] + 2 (A_y A_x' - A_x A_y') }.
template <typename Scalar = double>
Scalar energy_bookkeeping_residual(Scalar t, const WaterbagSpec& spec) {
  const Scalar f0 = static_cast<Scalar>(spec.density());
  const auto ex = field_x_expansion<Scalar>(spec);
  const auto ey = field_y_expansion<Scalar>(spec);
  const Scalar tp = theta_boundary<Scalar>(t, spec, Side::plus).value;
  const Scalar tm = theta_boundary<Scalar>(t, spec, Side::minus).value;
  const Scalar vp = v_pm<Scalar>(t, spec, Side::plus).value;
  const Scalar vm = v_pm<Scalar>(t, spec, Side::minus).value;
  const Scalar u = u_coeff<Scalar>(t, spec).value;
  const Scalar vbar = vp + vm;
  const Scalar dv = vp - vm;
  const Scalar dp = static_cast<Scalar>(spec.delta_p);
  auto pow_diff = [&](int k) { return std::pow(tp, k) - std::pow(tm, k); };
  const Scalar kinetic = f0 / 6 *
                         (Scalar(3) / 5 * pow_diff(5) * u * u * dv + pow_diff(3) * u * vbar * dv +
                          pow_diff(1) * dv / 4 * (dv * dv + 3 * vbar * vbar));
  const Scalar field = 2 * (ey(t) * ex.derivative(t) - ex(t) * ey.derivative(t));
  return dp * dp / 24 - (kinetic + field);
}

/// Prediction columns on a time grid, in the same layout as simulated
/// samples: energy is the conserved H/N = dp^2/24, momentum P/N = I0.
template <typename Scalar = double>
std::vector<ObservableSample<Scalar>> predict_series(const WaterbagSpec& spec, const std::vector<Scalar>& times,
                                                     int k_max,
                                                     double small_seed_threshold = kSmallSeedThreshold) {
  validate_spec(spec);
  const auto ex = field_x_expansion<Scalar>(spec);
  const auto ey = field_y_expansion<Scalar>(spec);
  const auto ei = intensity_expansion<Scalar>(spec);
  const auto ed = dispersion_expansion<Scalar>(spec, small_seed_threshold);
  std::vector<Bunching<Scalar>> b;
  for (int k = 1; k <= k_max; ++k) {
    const Scalar v = bunching_prediction<Scalar>(k, spec).value;
    b.push_back({std::abs(v), v < 0 ? static_cast<Scalar>(std::numbers::pi) : Scalar{0}});
  }
  const Scalar dp = static_cast<Scalar>(spec.delta_p);
  std::vector<ObservableSample<Scalar>> out;
  out.reserve(times.size());
  for (const Scalar t : times) {
    ObservableSample<Scalar> s;
    s.t = t;
    s.a_x = ex(t);
    s.a_y = ey(t);
    s.intensity = ei(t);
    s.bunching = b;
    s.dispersion = ed(t);
    s.energy = dp * dp / 24;
    s.momentum = static_cast<Scalar>(spec.i0_norm);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fel
