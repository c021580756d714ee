#pragma once

// Self-consistent N-particle + wave integration.
//
//   dtheta_j/dt = p_j
//   dp_j/dt     = -2 (a_x cos theta_j - a_y sin theta_j)
//   da_x/dt     =  <cos theta>
//   da_y/dt     = -<sin theta>
//
// Classical fourth-order Runge-Kutta at fixed dt, with H/N and P/N monitored
// at every observer sample.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fel/core.hpp"
#include "fel/diag.hpp"
#include "fel/errors.hpp"
#include "fel/summation.hpp"

namespace fel {

struct IntegratorConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  int observer_stride = 10;
  double drift_tolerance = 1e-6;
  int k_max = 3;
  /// Test hook: scales both the force on particles and the field source.
  /// 0 gives free streaming.
  double coupling = 1.0;
  Execution execution{};

  friend bool operator==(const IntegratorConfig& a, const IntegratorConfig& b) {
    return a.dt == b.dt && a.t_end == b.t_end && a.observer_stride == b.observer_stride &&
           a.drift_tolerance == b.drift_tolerance && a.k_max == b.k_max && a.coupling == b.coupling &&
           a.execution.workers == b.execution.workers &&
           a.execution.deterministic == b.execution.deterministic;
  }
};

inline std::vector<std::string> config_violations(const IntegratorConfig& c) {
  std::vector<std::string> out;
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) out.emplace_back("dt must be positive");
  if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) out.emplace_back("t_end must be non-negative");
  if (c.observer_stride < 1) out.emplace_back("stride must be at least 1");
  if (!(c.drift_tolerance > 0.0)) out.emplace_back("drift_tolerance must be positive");
  if (c.k_max < 0) out.emplace_back("k_max must be non-negative");
  return out;
}

inline const IntegratorConfig& validate_config(const IntegratorConfig& c) {
  auto v = config_violations(c);
  if (!v.empty()) throw ValidationError(std::move(v));
  return c;
}

template <typename Scalar>
struct StateRate {
  ArrayX<Scalar> dtheta;
  ArrayX<Scalar> dp;
  Scalar da_x{0};
  Scalar da_y{0};
};

template <typename Scalar>
struct FieldStage {
  Scalar a_x{0};
  Scalar a_y{0};
};

/// Field values seen by each of the four Runge-Kutta stages of every step.
/// Passive test particles replay these to move exactly as zero-weight members
/// of the ensemble.
template <typename Scalar>
struct FieldHistory {
  Scalar t0{0};
  Scalar dt{0};
  std::vector<std::array<FieldStage<Scalar>, 4>> steps;

  Scalar horizon() const { return t0 + dt * static_cast<Scalar>(steps.size()); }
};

template <typename Scalar>
class Integrator {
 public:
  explicit Integrator(Execution exec = {}, Scalar coupling = 1) : exec_(exec), coupling_(coupling) {}

  const Execution& execution() const { return exec_; }

  void derivatives(const SystemState<Scalar>& s, StateRate<Scalar>& out) const {
    const auto n = s.size();
    out.dtheta.resize(n);
    out.dp.resize(n);
    const Scalar fx = 2 * coupling_ * s.a_x;
    const Scalar fy = 2 * coupling_ * s.a_y;
    const auto sums = chunked_reduce<Scalar>(n, 2, exec_, [&](Eigen::Index b, Eigen::Index e, auto* acc) {
      for (Eigen::Index j = b; j < e; ++j) {
        const Scalar c = std::cos(s.theta(j));
        const Scalar sn = std::sin(s.theta(j));
        out.dtheta(j) = s.p(j);
        out.dp(j) = -(fx * c - fy * sn);
        acc[0] += c;
        acc[1] += sn;
      }
    });
    const Scalar nn = static_cast<Scalar>(n);
    out.da_x = coupling_ * sums[0] / nn;
    out.da_y = -coupling_ * sums[1] / nn;
  }

  /// Advances `s` by `dt`. When `stages` is non-null the field at each stage
  /// is written there.
  void step(SystemState<Scalar>& s, Scalar dt, std::array<FieldStage<Scalar>, 4>* stages = nullptr) {
    const Scalar half = dt / 2;
    record(stages, 0, s);
    derivatives(s, k1_);
    stage(s, k1_, half);
    record(stages, 1, tmp_);
    derivatives(tmp_, k2_);
    stage(s, k2_, half);
    record(stages, 2, tmp_);
    derivatives(tmp_, k3_);
    stage(s, k3_, dt);
    record(stages, 3, tmp_);
    derivatives(tmp_, k4_);

    const Scalar w = dt / 6;
    chunked_for(s.size(), exec_, [&](Eigen::Index b, Eigen::Index e) {
      for (Eigen::Index j = b; j < e; ++j) {
        s.theta(j) += w * (k1_.dtheta(j) + 2 * k2_.dtheta(j) + 2 * k3_.dtheta(j) + k4_.dtheta(j));
        s.p(j) += w * (k1_.dp(j) + 2 * k2_.dp(j) + 2 * k3_.dp(j) + k4_.dp(j));
      }
    });
    s.a_x += w * (k1_.da_x + 2 * k2_.da_x + 2 * k3_.da_x + k4_.da_x);
    s.a_y += w * (k1_.da_y + 2 * k2_.da_y + 2 * k3_.da_y + k4_.da_y);
    s.t += dt;
    if (!s.all_finite()) throw NumericalError("non-finite state at t = " + std::to_string(s.t));
  }

 private:
  static void record(std::array<FieldStage<Scalar>, 4>* stages, int i, const SystemState<Scalar>& s) {
    if (stages) (*stages)[static_cast<std::size_t>(i)] = {s.a_x, s.a_y};
  }

  void stage(const SystemState<Scalar>& s, const StateRate<Scalar>& k, Scalar h) {
    tmp_.t = s.t + h;
    tmp_.theta.resize(s.size());
    tmp_.p.resize(s.size());
    chunked_for(s.size(), exec_, [&](Eigen::Index b, Eigen::Index e) {
      for (Eigen::Index j = b; j < e; ++j) {
        tmp_.theta(j) = s.theta(j) + h * k.dtheta(j);
        tmp_.p(j) = s.p(j) + h * k.dp(j);
      }
    });
    tmp_.a_x = s.a_x + h * k.da_x;
    tmp_.a_y = s.a_y + h * k.da_y;
  }

  Execution exec_;
  Scalar coupling_;
  StateRate<Scalar> k1_, k2_, k3_, k4_;
  SystemState<Scalar> tmp_;
};

template <typename Scalar>
StateRate<Scalar> derivatives(const SystemState<Scalar>& state, const Execution& exec = {}) {
  if (!state.all_finite()) throw NumericalError("non-finite state");
  StateRate<Scalar> out;
  Integrator<Scalar>(exec).derivatives(state, out);
  return out;
}

template <typename Scalar>
SystemState<Scalar> step(SystemState<Scalar> state, Scalar dt, const Execution& exec = {}) {
  if (!(dt > 0)) throw ValidationError("dt must be positive");
  Integrator<Scalar>(exec).step(state, dt);
  return state;
}

template <typename Scalar>
struct SimulationSeries {
  std::vector<ObservableSample<Scalar>> samples;
  std::optional<Scalar> flip_time;
  WaterbagSpec spec;
  IntegratorConfig config;
};

/// Relative drift |X - X0| / max(|X0|, m0, 1e-12), where m0 is the magnitude
/// of the particle part of the invariant at t = 0. The particle-part floor
/// keeps the measure meaningful when an invariant starts at exactly zero
/// (P/N with no seed field).
struct DriftMonitor {
  static constexpr double kFloor = 1e-12;

  template <typename Scalar>
  explicit DriftMonitor(const Invariants<Scalar>& initial)
      : energy0(initial.energy),
        momentum0(initial.momentum),
        energy_scale(std::max({std::abs(static_cast<double>(initial.energy)),
                               static_cast<double>(initial.kinetic_scale), kFloor})),
        momentum_scale(std::max({std::abs(static_cast<double>(initial.momentum)),
                                 static_cast<double>(initial.momentum_scale), kFloor})) {}

  double energy_drift(double energy) const { return std::abs(energy - energy0) / energy_scale; }
  double momentum_drift(double momentum) const { return std::abs(momentum - momentum0) / momentum_scale; }

  double energy0, momentum0, energy_scale, momentum_scale;
};

inline std::int64_t step_count(const IntegratorConfig& c) {
  return static_cast<std::int64_t>(std::llround(c.t_end / c.dt));
}

/// Integrates from the sampled waterbag to t_end, sampling observables at
/// t = 0, every `observer_stride` steps, and at the final step. Throws
/// ConservationError when H/N or P/N drifts beyond `drift_tolerance`.
/// Optionally records the per-stage field history for passive markers.
template <typename Scalar = double>
SimulationSeries<Scalar> run(const WaterbagSpec& spec, const IntegratorConfig& config,
                             FieldHistory<Scalar>* history = nullptr) {
  validate_spec(spec);
  validate_config(config);
  SimulationSeries<Scalar> series;
  series.spec = spec;
  series.config = config;

  auto state = sample_waterbag<Scalar>(spec);
  const auto dt = static_cast<Scalar>(config.dt);
  const std::int64_t steps = step_count(config);
  Integrator<Scalar> integrator(config.execution, static_cast<Scalar>(config.coupling));
  const DriftMonitor monitor(invariants(state, config.execution));

  if (history) {
    history->t0 = state.t;
    history->dt = dt;
    history->steps.assign(static_cast<std::size_t>(steps), {});
  }

  auto sample = [&] {
    auto obs = observe(state, config.k_max, config.execution);
    const double dh = monitor.energy_drift(static_cast<double>(obs.energy));
    const double dm = monitor.momentum_drift(static_cast<double>(obs.momentum));
    if (dh > config.drift_tolerance || dm > config.drift_tolerance) {
      std::ostringstream msg;
      msg << std::scientific << std::setprecision(3) << "conservation violated at t = " << obs.t
          << ": energy drift " << dh << ", momentum drift " << dm << " (tolerance " << config.drift_tolerance
          << ")";
      throw ConservationError(msg.str());
    }
    series.samples.push_back(std::move(obs));
  };

  sample();
  for (std::int64_t i = 0; i < steps; ++i) {
    integrator.step(state, dt, history ? &history->steps[static_cast<std::size_t>(i)] : nullptr);
    state.t = static_cast<Scalar>(i + 1) * dt;
    if ((i + 1) % config.observer_stride == 0 || i + 1 == steps) sample();
  }
  return series;
}

}  // namespace fel
