#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "trq/types.hpp"

namespace trq {

enum class TrajectoryKind { hover, step, circle, figure_eight, waypoints };

/// Reference path parameters. All built-in paths are C2 in position with a
/// consistent velocity profile; attitude reference is level, with yaw tracking
/// the path tangent for circle and figure-eight and zero otherwise.
struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::hover;

  Vec3 hover_point = Vec3(0.0, 0.0, 2.0);

  double circle_radius = 2.0;
  double circle_period = 20.0;
  double circle_altitude = 2.0;

  double eight_amp_x = 2.0;
  double eight_amp_y = 1.0;
  double eight_period = 20.0;
  double eight_altitude = 2.0;

  Vec3 step_base = Vec3(0.0, 0.0, 2.0);
  Vec3 step_offset = Vec3(1.0, 0.0, 0.0);
  double step_time = 1.0;
  double step_blend = 0.5;

  std::vector<Vec3> waypoint_list;
  double waypoint_segment_duration = 5.0;

  void validate() const {
    if (circle_period <= 0.0 || eight_period <= 0.0)
      throw std::invalid_argument("trajectory period must be positive");
    if (step_blend <= 0.0) throw std::invalid_argument("step blend duration must be positive");
    if (kind == TrajectoryKind::waypoints) {
      if (waypoint_list.size() < 2)
        throw std::invalid_argument("waypoint trajectory needs at least two points");
      if (waypoint_segment_duration <= 0.0)
        throw std::invalid_argument("waypoint segment duration must be positive");
    }
  }
};

struct ReferencePoint {
  State state_ref;
};

namespace detail {

/// Quintic smoothstep: sigma(0) = 0, sigma(1) = 1, zero first and second
/// derivatives at both ends.
inline double smoothstep5(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
}

inline double smoothstep5_rate(double tau) {
  if (tau <= 0.0 || tau >= 1.0) return 0.0;
  return 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau);
}

/// Continuous tangent heading of the figure-eight, unwrapped by walking the
/// phase from 0 in fixed increments and accumulating wrapped differences.
inline double eight_heading_unwrapped(double theta, double ax, double ay) {
  const auto heading = [&](double th) {
    return std::atan2(2.0 * ay * std::cos(2.0 * th), ax * std::cos(th));
  };
  const double dth = 2.0 * M_PI / 1024.0;
  double psi = heading(0.0);
  double prev = psi;
  const int n = static_cast<int>(std::ceil(std::abs(theta) / dth));
  const double sgn = theta >= 0.0 ? 1.0 : -1.0;
  for (int i = 1; i <= n; ++i) {
    const double th = sgn * std::min(i * dth, std::abs(theta));
    const double raw = heading(th);
    double diff = raw - std::fmod(prev, 2.0 * M_PI);
    while (diff > M_PI) diff -= 2.0 * M_PI;
    while (diff < -M_PI) diff += 2.0 * M_PI;
    psi += diff;
    prev = psi;
  }
  return psi;
}

}  // namespace detail

inline ReferencePoint reference(const TrajectoryConfig& cfg, double t) {
  if (t < 0.0) throw std::invalid_argument("reference time must be >= 0");
  State s;
  s.p.setZero();
  s.v.setZero();
  s.eta.setZero();
  s.omega.setZero();

  switch (cfg.kind) {
    case TrajectoryKind::hover:
      s.p = cfg.hover_point;
      break;

    case TrajectoryKind::step: {
      const double tau = (t - cfg.step_time) / cfg.step_blend;
      s.p = cfg.step_base + detail::smoothstep5(tau) * cfg.step_offset;
      s.v = (detail::smoothstep5_rate(tau) / cfg.step_blend) * cfg.step_offset;
      break;
    }

    case TrajectoryKind::circle: {
      const double w = 2.0 * M_PI / cfg.circle_period;
      const double th = w * t;
      s.p = Vec3(cfg.circle_radius * std::sin(th), cfg.circle_radius * (1.0 - std::cos(th)),
                 cfg.circle_altitude);
      s.v = Vec3(cfg.circle_radius * w * std::cos(th), cfg.circle_radius * w * std::sin(th), 0.0);
      s.eta[2] = th;  // tangent heading, already unwrapped
      s.omega[2] = w;
      break;
    }

    case TrajectoryKind::figure_eight: {
      const double w = 2.0 * M_PI / cfg.eight_period;
      const double th = w * t;
      const double ax = cfg.eight_amp_x, ay = cfg.eight_amp_y;
      s.p = Vec3(ax * std::sin(th), ay * std::sin(2.0 * th), cfg.eight_altitude);
      const double vx = ax * w * std::cos(th);
      const double vy = 2.0 * ay * w * std::cos(2.0 * th);
      s.v = Vec3(vx, vy, 0.0);
      s.eta[2] = detail::eight_heading_unwrapped(th, ax, ay);
      // psi_dot = (vx ay_ddot... ) via the planar curvature formula
      const double axx = -ax * w * w * std::sin(th);
      const double ayy = -4.0 * ay * w * w * std::sin(2.0 * th);
      const double speed2 = vx * vx + vy * vy;
      s.omega[2] = speed2 > 1e-12 ? (vx * ayy - vy * axx) / speed2 : 0.0;
      break;
    }

    case TrajectoryKind::waypoints: {
      const auto& pts = cfg.waypoint_list;
      const double seg_t = cfg.waypoint_segment_duration;
      const int nseg = static_cast<int>(pts.size()) - 1;
      const int seg = std::min(nseg - 1, static_cast<int>(t / seg_t));
      const double tau = (t - seg * seg_t) / seg_t;
      s.p = pts[seg] + detail::smoothstep5(tau) * (pts[seg + 1] - pts[seg]);
      s.v = (detail::smoothstep5_rate(tau) / seg_t) * (pts[seg + 1] - pts[seg]);
      break;
    }
  }
  return ReferencePoint{s};
}

}  // namespace trq
