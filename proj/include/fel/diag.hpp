#pragma once

// Ensemble observables and simulation-vs-theory error reports.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fel/core.hpp"
#include "fel/errors.hpp"
#include "fel/summation.hpp"

namespace fel {

/// b_k = (1/N) sum_j exp(-i k theta_j).
template <typename Scalar>
Bunching<Scalar> bunching_of(const SystemState<Scalar>& state, int k, const Execution& exec = {}) {
  const auto n = state.size();
  const auto kk = static_cast<Scalar>(k);
  const auto sums = chunked_reduce<Scalar>(n, 2, exec, [&](Eigen::Index b, Eigen::Index e, auto* acc) {
    for (Eigen::Index j = b; j < e; ++j) {
      acc[0] += std::cos(kk * state.theta(j));
      acc[1] += std::sin(kk * state.theta(j));
    }
  });
  const Scalar re = sums[0] / static_cast<Scalar>(n);
  const Scalar im = -sums[1] / static_cast<Scalar>(n);
  return {std::hypot(re, im), std::atan2(im, re)};
}

/// Momentum variance <p^2> - <p>^2, evaluated about the mean.
template <typename Scalar>
Scalar dispersion_of(const SystemState<Scalar>& state, const Execution& exec = {}) {
  const auto n = state.size();
  const auto nn = static_cast<Scalar>(n);
  const Scalar mean = chunked_reduce<Scalar>(n, 1, exec, [&](Eigen::Index b, Eigen::Index e, auto* acc) {
    for (Eigen::Index j = b; j < e; ++j) acc[0] += state.p(j);
  })[0] / nn;
  const Scalar var = chunked_reduce<Scalar>(n, 1, exec, [&](Eigen::Index b, Eigen::Index e, auto* acc) {
    for (Eigen::Index j = b; j < e; ++j) {
      const Scalar d = state.p(j) - mean;
      acc[0] += d * d;
    }
  })[0] / nn;
  return var;
}

/// Per-particle energy and momentum.
template <typename Scalar>
struct Invariants {
  Scalar energy{0};
  Scalar momentum{0};
  /// Magnitudes of the particle parts (<p^2>/2 and <|p|>), the reference
  /// scales for drift when an invariant itself is zero.
  Scalar kinetic_scale{0};
  Scalar momentum_scale{0};
};

/// H/N = <p^2/2> + 2 (a_x <sin theta> + a_y <cos theta>),  P/N = <p> + a_x^2 + a_y^2.
template <typename Scalar>
Invariants<Scalar> invariants(const SystemState<Scalar>& state, const Execution& exec = {}) {
  const auto n = state.size();
  const auto nn = static_cast<Scalar>(n);
  const auto s = chunked_reduce<Scalar>(n, 5, exec, [&](Eigen::Index b, Eigen::Index e, auto* acc) {
    for (Eigen::Index j = b; j < e; ++j) {
      const Scalar pj = state.p(j);
      acc[0] += pj * pj;
      acc[1] += pj;
      acc[2] += std::sin(state.theta(j));
      acc[3] += std::cos(state.theta(j));
      acc[4] += std::abs(pj);
    }
  });
  Invariants<Scalar> out;
  const Scalar kinetic = s[0] / (2 * nn);
  CompensatedSum<Scalar> h;
  h += kinetic;
  h += 2 * state.a_x * (s[2] / nn);
  h += 2 * state.a_y * (s[3] / nn);
  out.energy = h.value();
  CompensatedSum<Scalar> m;
  m += s[1] / nn;
  m += state.a_x * state.a_x;
  m += state.a_y * state.a_y;
  out.momentum = m.value();
  out.kinetic_scale = kinetic;
  out.momentum_scale = s[4] / nn;
  return out;
}

template <typename Scalar>
ObservableSample<Scalar> observe(const SystemState<Scalar>& state, int k_max, const Execution& exec = {}) {
  ObservableSample<Scalar> out;
  out.t = state.t;
  out.a_x = state.a_x;
  out.a_y = state.a_y;
  out.intensity = state.a_x * state.a_x + state.a_y * state.a_y;
  out.bunching.reserve(static_cast<std::size_t>(std::max(k_max, 0)));
  for (int k = 1; k <= k_max; ++k) out.bunching.push_back(bunching_of(state, k, exec));
  out.dispersion = dispersion_of(state, exec);
  const auto inv = invariants(state, exec);
  out.energy = inv.energy;
  out.momentum = inv.momentum;
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

/// Named column of an ObservableSample: t, ax, ay, intensity, bK_mag,
/// bK_phase, dispersion, energy, momentum.
template <typename Scalar>
Scalar column_value(const ObservableSample<Scalar>& s, const std::string& name) {
  if (name == "t") return s.t;
  if (name == "ax") return s.a_x;
  if (name == "ay") return s.a_y;
  if (name == "intensity") return s.intensity;
  if (name == "dispersion") return s.dispersion;
  if (name == "energy") return s.energy;
  if (name == "momentum") return s.momentum;
  if (name.size() > 5 && name[0] == 'b') {
    const auto us = name.find('_');
    if (us != std::string::npos) {
      int k = 0;
      const auto digits = std::string_view(name).substr(1, us - 1);
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
      if (ec != std::errc{} || ptr != digits.data() + digits.size()) k = 0;
      const auto field = name.substr(us + 1);
      if (k >= 1 && static_cast<std::size_t>(k) <= s.bunching.size()) {
        const auto& b = s.bunching[static_cast<std::size_t>(k - 1)];
        if (field == "mag") return b.magnitude;
        if (field == "phase") return b.phase;
      }
    }
  }
  throw ValidationError("unknown observable '" + name + "'");
}

/// Least-squares slope of log|y| against log x over points with x > 0 and
/// y != 0. NaN when fewer than two such points exist.
template <typename Scalar>
Scalar fit_power_law(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
  std::vector<Scalar> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0 && y[i] != 0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(std::abs(y[i])));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<Scalar>::quiet_NaN();
  const auto m = static_cast<Eigen::Index>(lx.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> design(m, 2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    design(i, 0) = lx[static_cast<std::size_t>(i)];
    design(i, 1) = 1;
    rhs(i) = ly[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix<Scalar, 2, 1> coef = design.colPivHouseholderQr().solve(rhs);
  return coef(0);
}

struct ComparisonWindow {
  std::string observable;
  double t_min = 0.0;
  double t_max = 0.0;
  std::optional<double> tolerance;  // no tolerance: reported, never fails
};

struct ObservableError {
  std::string observable;
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t points = 0;
  double max_relative_error = 0.0;
  double residual_exponent = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> tolerance;
  bool passed = true;
};

struct ErrorReport {
  std::vector<ObservableError> rows;
  bool passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
  }
};

inline constexpr double kRelativeErrorFloor = 1e-12;

/// Windows used when none are given: the validity range of the short-time
/// expansions, t in [0.05, 0.5].
inline std::vector<ComparisonWindow> default_windows() {
  return {{"intensity", 0.05, 0.5, 0.05}, {"ax", 0.05, 0.5, 0.05}, {"ay", 0.05, 0.5, std::nullopt},
          {"dispersion", 0.05, 0.5, std::nullopt}, {"b1_mag", 0.05, 0.5, std::nullopt}};
}

/// Relative error of `sim` against `pred` per window, plus the fitted
/// power-law exponent of |sim - pred|. Time grids must match sample for sample
/// unless `interpolate` is set, in which case `pred` is linearly interpolated
/// onto the simulation times.
template <typename Scalar>
ErrorReport compare_series(const std::vector<ObservableSample<Scalar>>& sim,
                           const std::vector<ObservableSample<Scalar>>& pred,
                           const std::vector<ComparisonWindow>& windows, bool interpolate = false) {
  auto pred_at = [&](std::size_t i, const std::string& name) -> Scalar {
    const Scalar t = sim[i].t;
    if (!interpolate) return column_value(pred[i], name);
    auto it = std::lower_bound(pred.begin(), pred.end(), t,
                               [](const auto& s, Scalar v) { return s.t < v; });
    if (it == pred.end()) throw ValidationError("prediction does not cover t = " + std::to_string(t));
    if (it->t == t || it == pred.begin()) {
      if (it->t != t) throw ValidationError("prediction does not cover t = " + std::to_string(t));
      return column_value(*it, name);
    }
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const Scalar w = (t - lo.t) / (hi.t - lo.t);
    return (1 - w) * column_value(lo, name) + w * column_value(hi, name);
  };

  if (!interpolate) {
    if (sim.size() != pred.size()) throw ValidationError("time grids differ in length; use interpolation");
    for (std::size_t i = 0; i < sim.size(); ++i) {
      const Scalar scale = std::max<Scalar>(std::abs(sim[i].t), 1);
      if (std::abs(sim[i].t - pred[i].t) > 1e-12 * scale) {
        throw ValidationError("time grids differ at sample " + std::to_string(i) + "; use interpolation");
      }
    }
  }

  ErrorReport report;
  for (const auto& w : windows) {
    ObservableError row;
    row.observable = w.observable;
    row.t_min = w.t_min;
    row.t_max = w.t_max;
    row.tolerance = w.tolerance;
    std::vector<Scalar> ts, residuals;
    for (std::size_t i = 0; i < sim.size(); ++i) {
      const Scalar t = sim[i].t;
      if (t < w.t_min - 1e-12 || t > w.t_max + 1e-12) continue;
      const Scalar s = column_value(sim[i], w.observable);
      const Scalar p = pred_at(i, w.observable);
      const Scalar rel = std::abs(s - p) / std::max<Scalar>(std::abs(p), kRelativeErrorFloor);
      row.max_relative_error = std::max<double>(row.max_relative_error, static_cast<double>(rel));
      ts.push_back(t);
      residuals.push_back(s - p);
    }
    row.points = ts.size();
    row.residual_exponent = static_cast<double>(fit_power_law(ts, residuals));
    if (w.tolerance) row.passed = row.points > 0 && row.max_relative_error <= *w.tolerance;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fel
