#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "trq/types.hpp"

namespace trq {

inline constexpr double kPitchSingularityMargin = 1e-6;

/// Propeller thrust [N] for a throttle percentage, clamped at zero below the
/// curve's positive root (the quadratic fit is only valid in the operating band).
inline double thrust_from_throttle(double zeta, const VehicleParams& params) {
  if (zeta < 0.0 || zeta > 100.0)
    throw std::out_of_range("throttle " + std::to_string(zeta) + " outside [0, 100]");
  const Vec3& c = params.thrust_coeffs;
  return std::max(0.0, c[0] * zeta * zeta + c[1] * zeta + c[2]);
}

/// Propeller drag torque [N m] for a throttle percentage, clamped at zero.
inline double torque_from_throttle(double zeta, const VehicleParams& params) {
  if (zeta < 0.0 || zeta > 100.0)
    throw std::out_of_range("throttle " + std::to_string(zeta) + " outside [0, 100]");
  const Vec3& c = params.torque_coeffs;
  return std::max(0.0, c[0] * zeta * zeta + c[1] * zeta + c[2]);
}

/// Slope of the (unclamped) thrust curve. Used as a Jacobian surrogate inside
/// the allocation solver; strictly positive over [0, 100] for the stock curve.
inline double thrust_slope(double zeta, const VehicleParams& params) {
  const Vec3& c = params.thrust_coeffs;
  return 2.0 * c[0] * zeta + c[1];
}

inline double torque_slope(double zeta, const VehicleParams& params) {
  const Vec3& c = params.torque_coeffs;
  return 2.0 * c[0] * zeta + c[1];
}

/// Inverse of the thrust curve: throttle percentage producing `thrust` newtons.
/// Returns 0 for thrust <= 0 (clamped band). Not range-checked against 100.
inline double throttle_from_thrust(double thrust, const VehicleParams& params) {
  if (thrust <= 0.0) return 0.0;
  const Vec3& c = params.thrust_coeffs;
  if (std::abs(c[0]) < 1e-15) return (thrust - c[2]) / c[1];
  const double disc = c[1] * c[1] - 4.0 * c[0] * (c[2] - thrust);
  if (disc < 0.0) throw std::domain_error("thrust curve has no real root for requested thrust");
  return (-c[1] + std::sqrt(disc)) / (2.0 * c[0]);
}

/// Body-to-world rotation for ZYX (yaw-pitch-roll) Euler angles.
inline Mat3 rotation_from_euler(const Vec3& eta) {
  const double cr = std::cos(eta[0]), sr = std::sin(eta[0]);
  const double cp = std::cos(eta[1]), sp = std::sin(eta[1]);
  const double cy = std::cos(eta[2]), sy = std::sin(eta[2]);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  return r;
}

/// W(eta) mapping body rates to Euler-angle rates: eta_dot = W(eta) * omega_B.
/// Throws SingularityError when pitch is within kPitchSingularityMargin of +-pi/2.
inline Mat3 euler_rate_matrix(const Vec3& eta) {
  if (std::abs(eta[1]) >= M_PI / 2.0 - kPitchSingularityMargin) throw SingularityError(eta[1]);
  const double cr = std::cos(eta[0]), sr = std::sin(eta[0]);
  const double cp = std::cos(eta[1]), tp = std::tan(eta[1]);
  Mat3 w;
  w << 1.0, sr * tp, cr * tp,
       0.0, cr,      -sr,
       0.0, sr / cp, cr / cp;
  return w;
}

/// Newton-Euler rigid-body derivative given the net actuator wrench.
///
///   p_dot     = v
///   m v_dot   = R(eta) F_B - m g z + d_force          (d_force world frame)
///   eta_dot   = W(eta) omega
///   I w_dot   = tau_B - omega x I omega + d_torque    (d_torque body frame)
inline StateDerivative rigid_body_derivative(const State& state, const Vec3& force_body,
                                             const Vec3& torque_body, const Wrench& disturbance,
                                             const VehicleParams& params) {
  StateDerivative d;
  const Mat3 r = rotation_from_euler(state.eta);
  d.p_dot = state.v;
  d.v_dot = (r * force_body + disturbance.force) / params.mass -
            Vec3(0.0, 0.0, params.gravity);
  d.eta_dot = euler_rate_matrix(state.eta) * state.omega;
  const Vec3 i_omega = params.inertia_diag.cwiseProduct(state.omega);
  d.omega_dot = (torque_body - state.omega.cross(i_omega) + disturbance.torque)
                    .cwiseQuotient(params.inertia_diag);
  return d;
}

}  // namespace trq
