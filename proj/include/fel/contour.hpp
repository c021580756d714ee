#pragma once

// Waterbag boundary tracking with passive test particles.
//
// Markers seeded on the four edges of the initial rectangle are advanced
// through a recorded field history with the same Runge-Kutta stages as the
// ensemble, so they move exactly like zero-weight particles and never feed
// back into the field.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fel/core.hpp"
#include "fel/errors.hpp"
#include "fel/nbody.hpp"

namespace fel {

enum class Edge { top = 0, bottom = 1, left = 2, right = 3 };

inline constexpr std::array<Edge, 4> kEdges{Edge::top, Edge::bottom, Edge::left, Edge::right};

inline const char* to_string(Edge e) {
  switch (e) {
    case Edge::top: return "top";
    case Edge::bottom: return "bottom";
    case Edge::left: return "left";
    case Edge::right: return "right";
  }
  return "?";
}

/// Unique marker positions plus, per edge, the ordered indices of the markers
/// on it. Horizontal edges run in increasing theta, lateral edges in
/// increasing p; the four corners are shared by two edges.
template <typename Scalar>
struct BoundaryMarkers {
  ArrayX<Scalar> theta;
  ArrayX<Scalar> p;
  std::array<std::vector<Eigen::Index>, 4> edges;

  const std::vector<Eigen::Index>& edge(Edge e) const { return edges[static_cast<std::size_t>(e)]; }
  Eigen::Index size() const { return theta.size(); }
};

template <typename Scalar>
struct ParabolaFit {
  Scalar u{0};
  Scalar v_plus{0};
  Scalar v_minus{0};
  Scalar rms_residual{0};
};

template <typename Scalar>
struct MarkerTrajectory {
  std::vector<Scalar> times;
  std::vector<BoundaryMarkers<Scalar>> snapshots;
};

inline constexpr int kMinMarkersPerEdge = 8;

template <typename Scalar = double>
BoundaryMarkers<Scalar> seed_markers(const WaterbagSpec& spec, int n_per_edge) {
  validate_spec(spec);
  if (n_per_edge < kMinMarkersPerEdge) {
    throw ValidationError("markers_per_edge must be at least " + std::to_string(kMinMarkersPerEdge));
  }
  if (!(spec.delta_p > 0.0)) throw ValidationError("boundary tracking requires delta_p > 0");

  const Eigen::Index n = n_per_edge;
  const auto alpha = static_cast<Scalar>(spec.alpha);
  const auto half = static_cast<Scalar>(spec.delta_p) / 2;
  auto lerp = [n](Scalar lo, Scalar hi, Eigen::Index i) {
    if (i == n - 1) return hi;
    return lo + (hi - lo) * static_cast<Scalar>(i) / static_cast<Scalar>(n - 1);
  };

  BoundaryMarkers<Scalar> m;
  m.theta.resize(4 * n - 4);
  m.p.resize(4 * n - 4);
  Eigen::Index next = 0;
  auto add = [&](Scalar th, Scalar pp) {
    m.theta(next) = th;
    m.p(next) = pp;
    return next++;
  };
  auto& top = m.edges[static_cast<std::size_t>(Edge::top)];
  auto& bottom = m.edges[static_cast<std::size_t>(Edge::bottom)];
  auto& left = m.edges[static_cast<std::size_t>(Edge::left)];
  auto& right = m.edges[static_cast<std::size_t>(Edge::right)];
  for (Eigen::Index i = 0; i < n; ++i) top.push_back(add(lerp(-alpha, alpha, i), half));
  for (Eigen::Index i = 0; i < n; ++i) bottom.push_back(add(lerp(-alpha, alpha, i), -half));
  left.push_back(bottom.front());
  right.push_back(bottom.back());
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    left.push_back(add(-alpha, lerp(-half, half, i)));
    right.push_back(add(alpha, lerp(-half, half, i)));
  }
  left.push_back(top.front());
  right.push_back(top.back());
  return m;
}

/// Replays `history` on the markers, recording a snapshot at t0 and every
/// `stride` steps (and the last step). Throws if `t_end` lies beyond the
/// recorded horizon; a negative `t_end` means the full history.
template <typename Scalar>
MarkerTrajectory<Scalar> advect_markers(const BoundaryMarkers<Scalar>& markers,
                                        const FieldHistory<Scalar>& history, int stride = 1,
                                        Scalar t_end = Scalar{-1}) {
  if (stride < 1) throw ValidationError("stride must be at least 1");
  auto steps = static_cast<std::int64_t>(history.steps.size());
  if (t_end >= 0) {
    const Scalar tol = history.dt * Scalar(1e-9);
    if (t_end > history.horizon() + tol) {
      throw ValidationError("advection horizon exceeded: requested t = " + std::to_string(t_end) +
                            ", history ends at " + std::to_string(history.horizon()));
    }
    steps = std::min<std::int64_t>(steps, std::llround((t_end - history.t0) / history.dt));
  }

  MarkerTrajectory<Scalar> out;
  BoundaryMarkers<Scalar> m = markers;
  out.times.push_back(history.t0);
  out.snapshots.push_back(m);

  const Scalar dt = history.dt;
  const Scalar half = dt / 2;
  const auto count = m.size();
  ArrayX<Scalar> kth[4], kp[4];
  // Same arithmetic as Integrator::derivatives, element by element.
  auto force = [](const ArrayX<Scalar>& th, const FieldStage<Scalar>& f) {
    ArrayX<Scalar> out(th.size());
    const Scalar fx = 2 * f.a_x;
    const Scalar fy = 2 * f.a_y;
    for (Eigen::Index j = 0; j < th.size(); ++j) out(j) = -(fx * std::cos(th(j)) - fy * std::sin(th(j)));
    return out;
  };
  for (std::int64_t i = 0; i < steps; ++i) {
    const auto& st = history.steps[static_cast<std::size_t>(i)];
    kth[0] = m.p;
    kp[0] = force(m.theta, st[0]);
    kth[1] = m.p + half * kp[0];
    kp[1] = force((m.theta + half * kth[0]).eval(), st[1]);
    kth[2] = m.p + half * kp[1];
    kp[2] = force((m.theta + half * kth[1]).eval(), st[2]);
    kth[3] = m.p + dt * kp[2];
    kp[3] = force((m.theta + dt * kth[2]).eval(), st[3]);
    const Scalar w = dt / 6;
    for (Eigen::Index j = 0; j < count; ++j) {
      m.theta(j) += w * (kth[0](j) + 2 * kth[1](j) + 2 * kth[2](j) + kth[3](j));
      m.p(j) += w * (kp[0](j) + 2 * kp[1](j) + 2 * kp[2](j) + kp[3](j));
    }
    if ((i + 1) % stride == 0 || i + 1 == steps) {
      out.times.push_back(history.t0 + static_cast<Scalar>(i + 1) * dt);
      out.snapshots.push_back(m);
    }
  }
  return out;
}

/// Joint least-squares fit of p = u theta^2 + v_pm on the top (+) and bottom
/// (-) edges, with one shared u.
template <typename Scalar>
ParabolaFit<Scalar> fit_parabola(const BoundaryMarkers<Scalar>& m) {
  const auto& top = m.edge(Edge::top);
  const auto& bottom = m.edge(Edge::bottom);
  if (top.size() < 3 || bottom.size() < 3) {
    throw ValidationError("parabola fit needs at least 3 markers per edge");
  }
  const auto rows = static_cast<Eigen::Index>(top.size() + bottom.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> design = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>::Zero(rows, 3);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(rows);
  Eigen::Index r = 0;
  for (const auto idx : top) {
    design(r, 0) = m.theta(idx) * m.theta(idx);
    design(r, 1) = 1;
    rhs(r++) = m.p(idx);
  }
  for (const auto idx : bottom) {
    design(r, 0) = m.theta(idx) * m.theta(idx);
    design(r, 2) = 1;
    rhs(r++) = m.p(idx);
  }
  const Eigen::Matrix<Scalar, 3, 1> coef = design.colPivHouseholderQr().solve(rhs);
  const Scalar rms = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<Scalar>(rows));
  return {coef(0), coef(1), coef(2), rms};
}

/// First snapshot time at which the boundary stops being single-stream: two
/// neighbouring markers on the top or bottom edge swap their theta order, or
/// two neighbouring lateral markers invert the order set by their initial
/// momenta. None if that never happens within the trajectory.
template <typename Scalar>
std::optional<Scalar> detect_flip(const MarkerTrajectory<Scalar>& traj) {
  for (std::size_t s = 1; s < traj.snapshots.size(); ++s) {
    const auto& m = traj.snapshots[s];
    for (const Edge e : kEdges) {
      const auto& idx = m.edge(e);
      for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        if (m.theta(idx[i + 1]) < m.theta(idx[i])) return traj.times[s];
      }
    }
  }
  return std::nullopt;
}

}  // namespace fel
