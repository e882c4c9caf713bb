#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "trq/model.hpp"
#include "trq/types.hpp"

namespace trq {

/// Rotor placement and spin directions. Arms lie in the body xy plane; each
/// rotor tilts about its own arm axis so thrust sweeps from +z toward the
/// horizontal direction a_i x z.
struct RotorGeometry {
  std::array<Vec3, 4> position;    // arm tip in body frame [m]
  std::array<Vec3, 4> tilt_axis;   // unit vector along the arm, outward
  std::array<double, 4> spin;      // +1 CCW viewed from above, -1 CW

  /// X layout: rotor i sits at azimuth 45 + 90 i degrees from body +x
  /// (0 front-right, 1 front-left, 2 rear-left, 3 rear-right), alternating
  /// spin starting CCW.
  static RotorGeometry x_layout(double arm_length) {
    RotorGeometry g;
    for (int i = 0; i < 4; ++i) {
      const double az = M_PI / 4.0 + M_PI / 2.0 * i;
      g.tilt_axis[i] = Vec3(std::cos(az), std::sin(az), 0.0);
      g.position[i] = arm_length * g.tilt_axis[i];
      g.spin[i] = (i % 2 == 0) ? 1.0 : -1.0;
    }
    return g;
  }

  void validate() const {
    for (int i = 0; i < 4; ++i) {
      if (std::abs(tilt_axis[i].norm() - 1.0) > 1e-9)
        throw std::invalid_argument("tilt_axis must be a unit vector");
      if (std::abs(tilt_axis[i][2]) > 1e-9)
        throw std::invalid_argument("tilt_axis must lie in the body xy plane");
      if (spin[i] != 1.0 && spin[i] != -1.0)
        throw std::invalid_argument("spin must be +1 or -1");
    }
  }
};

/// Thrust direction of rotor i at tilt angle alpha: alpha = 0 points along
/// body +z, positive alpha sweeps toward a_i x z = (a_y, -a_x, 0).
inline Vec3 tilt_direction(const Vec3& axis, double alpha) {
  const Vec3 sweep(axis[1], -axis[0], 0.0);
  return std::cos(alpha) * Vec3::UnitZ() + std::sin(alpha) * sweep;
}

/// Net body-frame wrench produced by a command: sum of tilted rotor thrusts,
/// their moment arms, and spin-signed drag torques along the tilted axes.
inline Wrench actuator_wrench(const ActuatorCommand& cmd, const RotorGeometry& geom,
                              const VehicleParams& params) {
  Wrench w;
  w.force.setZero();
  w.torque.setZero();
  for (int i = 0; i < 4; ++i) {
    const double f = thrust_from_throttle(cmd.zeta[i], params);
    const double q = torque_from_throttle(cmd.zeta[i], params);
    const Vec3 dir = tilt_direction(geom.tilt_axis[i], cmd.tilt[i]);
    w.force += f * dir;
    w.torque += geom.position[i].cross(f * dir) + geom.spin[i] * q * dir;
  }
  return w;
}

/// 6x8 Jacobian of actuator_wrench w.r.t. [zeta(4), tilt(4)]. Thrust and drag
/// slopes use the unclamped polynomials so the solver keeps a descent
/// direction inside the clamped low-throttle band.
inline Eigen::Matrix<double, 6, 8> wrench_jacobian(const ActuatorCommand& cmd,
                                                   const RotorGeometry& geom,
                                                   const VehicleParams& params) {
  Eigen::Matrix<double, 6, 8> j;
  j.setZero();
  for (int i = 0; i < 4; ++i) {
    const double f = thrust_from_throttle(cmd.zeta[i], params);
    const double q = torque_from_throttle(cmd.zeta[i], params);
    const double df = thrust_slope(cmd.zeta[i], params);
    const double dq = torque_slope(cmd.zeta[i], params);
    const Vec3 dir = tilt_direction(geom.tilt_axis[i], cmd.tilt[i]);
    const Vec3 sweep(geom.tilt_axis[i][1], -geom.tilt_axis[i][0], 0.0);
    const Vec3 ddir = -std::sin(cmd.tilt[i]) * Vec3::UnitZ() + std::cos(cmd.tilt[i]) * sweep;

    j.block<3, 1>(0, i) = df * dir;
    j.block<3, 1>(3, i) = geom.position[i].cross(df * dir) + geom.spin[i] * dq * dir;
    j.block<3, 1>(0, 4 + i) = f * ddir;
    j.block<3, 1>(3, 4 + i) = geom.position[i].cross(f * ddir) + geom.spin[i] * q * ddir;
  }
  return j;
}

struct AllocationResult {
  ActuatorCommand command;
  double residual_norm = 0.0;  // inf-norm of the wrench mismatch at the solution
  int iterations = 0;
  bool converged = false;
};

struct AllocationOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;          // inf-norm wrench residual, unweighted
  double regularization = 1e-3;     // pull toward u_prev in the null space
  double mu_init = 1e-4;            // Levenberg damping seed
  Vec6 weights = Vec6::Ones();      // residual row weights; raise a row to make its
                                    // component win when the demand is infeasible
};

namespace detail {

inline Vec8 project_box(const Vec8& u, const VehicleParams& params) {
  Vec8 p = u;
  for (int i = 0; i < 4; ++i)
    p[i] = std::clamp(p[i], params.throttle_range[0], params.throttle_range[1]);
  for (int i = 4; i < 8; ++i)
    p[i] = std::clamp(p[i], params.tilt_range[0], params.tilt_range[1]);
  return p;
}

/// Zero-tilt seed: the min-norm split of (lift, roll, pitch) over the four
/// thrusts, mapped back through the throttle curve. Drag yaw and the clamped
/// band are ignored; the point is a starting basin where torque comes from
/// throttle differentials, which the iteration refines.
inline Vec8 throttle_seed(const Wrench& desired, const RotorGeometry& geom,
                          const VehicleParams& params) {
  Eigen::Matrix<double, 3, 4> m;
  for (int i = 0; i < 4; ++i) {
    m(0, i) = 1.0;
    m(1, i) = geom.position[i][1];   // thrust along +z: tau_x = sum y_i F_i
    m(2, i) = -geom.position[i][0];  // tau_y = -sum x_i F_i
  }
  const Vec3 rhs(desired.force[2], desired.torque[0], desired.torque[1]);
  const Eigen::Vector4d f =
      m.transpose() * (m * m.transpose()).ldlt().solve(rhs);
  Vec8 u = Vec8::Zero();
  const double f_max = thrust_from_throttle(params.throttle_range[1], params);
  for (int i = 0; i < 4; ++i)
    u[i] = throttle_from_thrust(std::clamp(f[i], 0.0, f_max), params);
  return project_box(u, params);
}

}  // namespace detail

/// Solve actuator_wrench(u) = desired for u, warm-started at u_prev.
///
/// Damped Gauss-Newton with a lexicographic split: a min-norm range-space step
/// drives the residual, then the projector onto the Jacobian null space pulls
/// toward u_prev without disturbing the achieved wrench. Backtracking line
/// search on |W r|^2 + lambda |u - u_prev|^2 keeps iterates from overshooting
/// near the box. When the demand is infeasible the solution lands where the
/// weighted residual is stationary, so the weights decide which wrench
/// component gives way; convergence and the reported residual stay unweighted.
inline AllocationResult allocate(const Wrench& desired, const ActuatorCommand& u_prev,
                                 const RotorGeometry& geom, const VehicleParams& params,
                                 const AllocationOptions& opts = {}) {
  using Mat68 = Eigen::Matrix<double, 6, 8>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Mat8 = Eigen::Matrix<double, 8, 8>;

  const Vec6 target = desired.vec();
  const Vec8 prev = u_prev.vec();

  const auto weighted_residual = [&](const Vec8& x) -> Vec6 {
    const Vec6 r = target - actuator_wrench(ActuatorCommand::from_vec(x), geom, params).vec();
    return opts.weights.cwiseProduct(r);
  };
  const auto merit = [&](const Vec8& x) {
    return weighted_residual(x).squaredNorm() +
           opts.regularization * (x - prev).squaredNorm();
  };

  struct Run {
    Vec8 u = Vec8::Zero();
    int iterations = 0;
    bool converged = false;
  };
  Vec8 lo, hi;
  for (int i = 0; i < 4; ++i) {
    lo[i] = params.throttle_range[0];
    hi[i] = params.throttle_range[1];
    lo[4 + i] = params.tilt_range[0];
    hi[4 + i] = params.tilt_range[1];
  }

  const auto solve_from = [&](Vec8 u) {
    Run run;
    double mu = opts.mu_init;
    Vec6 r = target - actuator_wrench(ActuatorCommand::from_vec(u), geom, params).vec();
    for (int it = 0; it < opts.max_iterations; ++it) {
      run.iterations = it;
      if (r.lpNorm<Eigen::Infinity>() < opts.tolerance) {
        run.converged = true;
        break;
      }

      const Mat68 j_raw = wrench_jacobian(ActuatorCommand::from_vec(u), geom, params);
      const Mat68 j = opts.weights.asDiagonal() * j_raw;
      // Freeze coordinates pinned at the box with the descent direction
      // pointing outward, and solve on the rest; a full-space step clipped by
      // the projection stops being a descent direction once a bound binds.
      const Vec6 wr = opts.weights.cwiseProduct(r);
      const Vec8 grad = -j.transpose() * wr + opts.regularization * (u - prev);
      constexpr double kEdge = 1e-9;
      std::array<int, 8> free_idx{};
      int nf = 0;
      for (int i = 0; i < 8; ++i) {
        const bool at_lo = u[i] <= lo[i] + kEdge && grad[i] > 0.0;
        const bool at_hi = u[i] >= hi[i] - kEdge && grad[i] < 0.0;
        if (!at_lo && !at_hi) free_idx[nf++] = i;
      }
      if (nf == 0) break;  // every coordinate pinned; nothing movable

      Mat68 jf = Mat68::Zero();
      for (int a = 0; a < nf; ++a) jf.col(a) = j.col(free_idx[a]);
      const auto jf_block = jf.leftCols(nf);
      const Mat6 jjt = jf_block * jf_block.transpose() + mu * Mat6::Identity();
      const Eigen::LDLT<Mat6> ldlt(jjt);
      const Eigen::VectorXd step_f = jf_block.transpose() * ldlt.solve(wr);
      Eigen::VectorXd pull(nf);
      for (int a = 0; a < nf; ++a) pull[a] = prev[free_idx[a]] - u[free_idx[a]];
      // Null-space projector P = I - J^T (J J^T + mu I)^-1 J; exact only at mu=0
      // but the leakage is O(mu) and vanishes as the damping shrinks.
      const Eigen::VectorXd null_f = pull - jf_block.transpose() * ldlt.solve(jf_block * pull);

      Vec8 step = Vec8::Zero();
      for (int a = 0; a < nf; ++a) step[free_idx[a]] = step_f[a] + null_f[a];

      const double m0 = merit(u);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 12; ++ls) {
        const Vec8 cand = detail::project_box(u + alpha * step, params);
        if (merit(cand) < m0 - 1e-12) {
          u = cand;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (accepted) {
        mu = std::max(1e-10, mu * 0.3);
      } else {
        mu *= 10.0;
        if (mu > 1e8) break;  // stuck against the box or at a stationary point
      }
      r = target - actuator_wrench(ActuatorCommand::from_vec(u), geom, params).vec();
    }
    run.u = u;
    return run;
  };

  // The landscape is nonconvex (tilting a rotor trades its lift into moment,
  // a valley the iteration cannot leave once entered), so solve from the
  // caller's seed and from a zero-tilt differential-throttle seed, and keep
  // the better point.
  Run best = solve_from(detail::project_box(prev, params));
  if (!best.converged) {
    const Run alt = solve_from(detail::throttle_seed(desired, geom, params));
    if (alt.converged || merit(alt.u) < merit(best.u)) {
      best.u = alt.u;
      best.converged = alt.converged;
    }
    best.iterations += alt.iterations;
  }

  AllocationResult out;
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.command = ActuatorCommand::from_vec(best.u);
  out.residual_norm = (target - actuator_wrench(out.command, geom, params).vec())
                          .lpNorm<Eigen::Infinity>();
  return out;
}

/// Steady hover command: identical throttles holding weight with zero tilt.
/// Exact by symmetry; the drag torques of the two spin pairs cancel.
inline ActuatorCommand hover_trim(const RotorGeometry& geom, const VehicleParams& params) {
  (void)geom;
  ActuatorCommand cmd;
  const double per_rotor = params.mass * params.gravity / 4.0;
  cmd.zeta.setConstant(throttle_from_thrust(per_rotor, params));
  cmd.tilt.setZero();
  return cmd;
}

}  // namespace trq
