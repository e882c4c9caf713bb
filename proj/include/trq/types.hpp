#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace trq {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;

/// Thrown when the Euler-rate kinematics degenerate (pitch at +-pi/2).
class SingularityError : public std::domain_error {
 public:
  explicit SingularityError(double pitch)
      : std::domain_error("euler-rate matrix singular at pitch " + std::to_string(pitch)) {}
};

/// Physical constants of the airframe plus the per-rotor throttle curves.
///
/// thrust_coeffs / torque_coeffs are (a2, a1, a0): thrust = a2*z^2 + a1*z + a0
/// for throttle percentage z, clamped at zero (a propeller cannot pull).
struct VehicleParams {
  double mass = 2.1;                           // kg
  Vec3 inertia_diag{0.01241, 0.01241, 0.02365};  // kg m^2
  double arm_length = 0.23;                    // m, body center to rotor
  double gravity = 9.81;                       // m/s^2
  Vec3 thrust_coeffs{0.0007, 0.0157, -0.1891};   // N per (%^2, %, 1)
  Vec3 torque_coeffs{2e-6, 0.0007, -0.008};      // N m per (%^2, %, 1)
  Eigen::Vector2d throttle_range{0.0, 100.0};  // %
  Eigen::Vector2d tilt_range{-M_PI / 2.0, M_PI / 2.0};  // rad, symmetric about 0

  Mat3 inertia() const { return inertia_diag.asDiagonal(); }

  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("vehicle: mass must be > 0");
    if (!(inertia_diag.minCoeff() > 0.0))
      throw std::invalid_argument("vehicle: inertia entries must be > 0");
    if (!(arm_length > 0.0)) throw std::invalid_argument("vehicle: arm_length must be > 0");
    if (!(gravity > 0.0)) throw std::invalid_argument("vehicle: gravity must be > 0");
    if (!(throttle_range[0] < throttle_range[1]) || throttle_range[0] < 0.0 ||
        throttle_range[1] > 100.0)
      throw std::invalid_argument("vehicle: throttle_range must be ordered within [0, 100]");
    if (!(tilt_range[0] < tilt_range[1]) ||
        std::abs(tilt_range[0] + tilt_range[1]) > 1e-12)
      throw std::invalid_argument("vehicle: tilt_range must be symmetric about 0");
  }
};

/// 12-dimensional vehicle state.
///
/// Stacked layout used throughout: [p(3), v(3), eta(3), omega(3)] with
/// p, v in the world frame, eta = (roll, pitch, yaw), omega in the body frame.
struct State {
  Vec3 p = Vec3::Zero();      // m
  Vec3 v = Vec3::Zero();      // m/s
  Vec3 eta = Vec3::Zero();    // rad
  Vec3 omega = Vec3::Zero();  // rad/s

  Vec12 vec() const {
    Vec12 x;
    x << p, v, eta, omega;
    return x;
  }

  static State from_vec(const Vec12& x) {
    State s;
    s.p = x.segment<3>(0);
    s.v = x.segment<3>(3);
    s.eta = x.segment<3>(6);
    s.omega = x.segment<3>(9);
    return s;
  }

  bool finite() const { return vec().allFinite(); }
};

/// Time derivative of State (same layout, per-second units).
struct StateDerivative {
  Vec3 p_dot = Vec3::Zero();
  Vec3 v_dot = Vec3::Zero();
  Vec3 eta_dot = Vec3::Zero();
  Vec3 omega_dot = Vec3::Zero();

  Vec12 vec() const {
    Vec12 x;
    x << p_dot, v_dot, eta_dot, omega_dot;
    return x;
  }
};

/// The eight actuator inputs: throttle percentage and motor-group tilt per rotor.
///
/// Stacked layout: [zeta(4), tilt(4)].
struct ActuatorCommand {
  Vec4 zeta = Vec4::Zero();  // %, in throttle_range
  Vec4 tilt = Vec4::Zero();  // rad, in tilt_range

  Vec8 vec() const {
    Vec8 u;
    u << zeta, tilt;
    return u;
  }

  static ActuatorCommand from_vec(const Vec8& u) {
    ActuatorCommand c;
    c.zeta = u.segment<4>(0);
    c.tilt = u.segment<4>(4);
    return c;
  }

  ActuatorCommand clamped(const VehicleParams& params) const {
    ActuatorCommand c;
    c.zeta = zeta.cwiseMax(params.throttle_range[0]).cwiseMin(params.throttle_range[1]);
    c.tilt = tilt.cwiseMax(params.tilt_range[0]).cwiseMin(params.tilt_range[1]);
    return c;
  }

  bool within(const VehicleParams& params, double tol = 1e-9) const {
    return (zeta.array() >= params.throttle_range[0] - tol).all() &&
           (zeta.array() <= params.throttle_range[1] + tol).all() &&
           (tilt.array() >= params.tilt_range[0] - tol).all() &&
           (tilt.array() <= params.tilt_range[1] + tol).all();
  }
};

/// Force/torque pair. The frame depends on context: actuator wrenches are
/// body-frame force and torque; disturbance wrenches carry a world-frame
/// force (wind stays earth-fixed) and a body-frame torque.
struct Wrench {
  Vec3 force = Vec3::Zero();   // N
  Vec3 torque = Vec3::Zero();  // N m

  Vec6 vec() const {
    Vec6 w;
    w << force, torque;
    return w;
  }

  static Wrench from_vec(const Vec6& w) {
    Wrench out;
    out.force = w.segment<3>(0);
    out.torque = w.segment<3>(3);
    return out;
  }

  bool finite() const { return force.allFinite() && torque.allFinite(); }
};

}  // namespace trq
