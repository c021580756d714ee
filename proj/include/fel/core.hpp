#pragma once

// Domain types and reproducible waterbag initial conditions.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fel/errors.hpp"

namespace fel {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

enum class SamplingMode { quiet_lattice, pseudo_random };

/// Rectangular, symmetric waterbag: phases in [-alpha, alpha], momenta in
/// [-delta_p/2, delta_p/2], seed field intensity i0_norm = I0/N.
struct WaterbagSpec {
  double alpha = 0.0;
  double delta_p = 0.0;
  double i0_norm = 0.0;
  std::int64_t n_particles = 0;
  SamplingMode sampling = SamplingMode::quiet_lattice;
  std::uint64_t seed = 0;

  /// Phase-space density f0 = 1/(2 alpha delta_p). Undefined for a cold beam.
  double density() const {
    if (!(delta_p > 0.0)) throw ValidationError("density undefined for delta_p = 0");
    return 1.0 / (2.0 * alpha * delta_p);
  }

  friend bool operator==(const WaterbagSpec&, const WaterbagSpec&) = default;
};

/// Every violated invariant of `spec`, in a fixed order. Empty when valid.
inline std::vector<std::string> spec_violations(const WaterbagSpec& spec) {
  std::vector<std::string> out;
  if (!std::isfinite(spec.alpha)) {
    out.emplace_back("alpha must be finite");
  } else if (!(spec.alpha > 0.0)) {
    out.emplace_back("alpha must be positive");
  } else if (spec.alpha > std::numbers::pi) {
    out.emplace_back("alpha exceeds pi");
  }
  if (!std::isfinite(spec.delta_p)) {
    out.emplace_back("delta_p must be finite");
  } else if (spec.delta_p < 0.0) {
    out.emplace_back("delta_p must be non-negative");
  }
  if (!std::isfinite(spec.i0_norm)) {
    out.emplace_back("i0_norm must be finite");
  } else if (spec.i0_norm < 0.0) {
    out.emplace_back("i0_norm must be non-negative");
  }
  if (spec.n_particles < 2) out.emplace_back("n_particles must be at least 2");
  return out;
}

/// Returns `spec` unchanged, or throws ValidationError listing all violations.
inline const WaterbagSpec& validate_spec(const WaterbagSpec& spec) {
  auto violations = spec_violations(spec);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return spec;
}

/// Phases, momenta and the complex field A = a_x + i a_y at one instant.
/// Field components are per particle: a_x^2 + a_y^2 = I/N. Phases are
/// stored unwrapped.
template <typename Scalar>
struct SystemState {
  Scalar t{0};
  ArrayX<Scalar> theta;
  ArrayX<Scalar> p;
  Scalar a_x{0};
  Scalar a_y{0};

  Eigen::Index size() const { return theta.size(); }
  Scalar intensity() const { return a_x * a_x + a_y * a_y; }
  std::complex<Scalar> field() const { return {a_x, a_y}; }

  bool all_finite() const {
    return std::isfinite(t) && std::isfinite(a_x) && std::isfinite(a_y) &&
           theta.allFinite() && p.allFinite() && theta.size() == p.size();
  }
};

/// Bunching coefficient b_k = <exp(-i k theta)> in polar form.
template <typename Scalar>
struct Bunching {
  Scalar magnitude{0};
  Scalar phase{0};
};

template <typename Scalar>
struct ObservableSample {
  Scalar t{0};
  Scalar intensity{0};
  Scalar a_x{0};
  Scalar a_y{0};
  std::vector<Bunching<Scalar>> bunching;  // k = 1..k_max
  Scalar dispersion{0};
  Scalar energy{0};    // H/N
  Scalar momentum{0};  // P/N
};

/// Seed field in phase with the bunch: A(0) = sqrt(I0/N), real.
template <typename Scalar = double>
std::pair<Scalar, Scalar> initial_field(const WaterbagSpec& spec) {
  validate_spec(spec);
  return {std::sqrt(static_cast<Scalar>(spec.i0_norm)), Scalar{0}};
}

namespace detail {

// Generator for the rank-1 lattice j -> (j, j*g mod n): the integer nearest
// n/phi that is coprime with n.
inline std::int64_t lattice_generator(std::int64_t n) {
  auto g = static_cast<std::int64_t>(std::llround(static_cast<double>(n) / std::numbers::phi));
  g = std::max<std::int64_t>(g, 1);
  while (std::gcd(g, n) != 1) ++g;
  return g;
}

// 53-bit uniform in [0, 1); independent of the standard library's
// distribution implementation.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Draws N particles uniformly in [-alpha, alpha] x [-delta_p/2, delta_p/2].
///
/// Quiet mode uses N distinct stratified phases, paired with stratified
/// momenta through a point-symmetric rank-1 lattice permutation, so phase and
/// momentum means vanish to rounding and b_k matches sin(k alpha)/(k alpha) to
/// O((k alpha/N)^2). Momenta are rescaled so the sample variance equals
/// delta_p^2/12 exactly.
template <typename Scalar = double>
SystemState<Scalar> sample_waterbag(const WaterbagSpec& spec) {
  validate_spec(spec);
  const std::int64_t n = spec.n_particles;
  SystemState<Scalar> state;
  state.theta.resize(n);
  state.p.resize(n);
  const auto alpha = static_cast<Scalar>(spec.alpha);
  const auto half_dp = static_cast<Scalar>(spec.delta_p) / 2;

  if (spec.sampling == SamplingMode::quiet_lattice) {
    const std::int64_t g = detail::lattice_generator(n);
    // (n-1)(1-g) is even for any n and odd g, and for even n g is odd.
    std::int64_t offset = ((n - 1) * (1 - g) / 2) % n;
    if (offset < 0) offset += n;
    const auto nn = static_cast<Scalar>(n);
    const Scalar variance_fix = Scalar{1} / std::sqrt(Scalar{1} - Scalar{1} / (nn * nn));
    for (std::int64_t j = 0; j < n; ++j) {
      const std::int64_t idx = static_cast<std::int64_t>(
          (static_cast<__int128>(j) * g + offset) % n);
      state.theta(j) = alpha * (static_cast<Scalar>(2 * j + 1 - n) / nn);
      state.p(j) = half_dp * (static_cast<Scalar>(2 * idx + 1 - n) / nn) * variance_fix;
    }
  } else {
    std::mt19937_64 rng(spec.seed);
    for (std::int64_t j = 0; j < n; ++j) {
      state.theta(j) = alpha * static_cast<Scalar>(2 * detail::unit_uniform(rng) - 1);
      state.p(j) = half_dp * static_cast<Scalar>(2 * detail::unit_uniform(rng) - 1);
    }
  }

  std::tie(state.a_x, state.a_y) = initial_field<Scalar>(spec);
  return state;
}

}  // namespace fel
