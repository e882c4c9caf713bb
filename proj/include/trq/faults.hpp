#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trq/types.hpp"

namespace trq {

enum class FaultKind { none, constant_effectiveness, sinusoidal_effectiveness };

/// Loss-of-effectiveness fault on one motor: the effective throttle is the
/// commanded throttle scaled by effectiveness(t). The controller never sees
/// the scaled value.
struct FaultSpec {
  int motor_index = 0;
  FaultKind kind = FaultKind::none;
  double lambda_const = 0.5;  // constant-effectiveness multiplier
  double amp = 0.2;           // sinusoidal: bias - amp * sin(freq * t)
  double bias = 0.8;
  double freq = 0.01;         // [rad/s]
  double start_time = 0.0;

  void validate() const {
    if (motor_index < 0 || motor_index > 3)
      throw std::invalid_argument("fault motor_index must be in 0..3");
    if (lambda_const < 0.0 || lambda_const > 1.0)
      throw std::invalid_argument("fault lambda must be in [0, 1]");
    if (start_time < 0.0) throw std::invalid_argument("fault start_time must be >= 0");
  }

  static FaultSpec none_preset() { return FaultSpec{}; }

  /// Motor 0 drops to half effectiveness at t = 5 s.
  static FaultSpec fault50_preset() {
    FaultSpec f;
    f.kind = FaultKind::constant_effectiveness;
    f.lambda_const = 0.5;
    f.start_time = 5.0;
    return f;
  }

  /// Slow sinusoidal degradation 0.8 - 0.2 sin(0.01 t) from the start.
  static FaultSpec fault_sine_preset() {
    FaultSpec f;
    f.kind = FaultKind::sinusoidal_effectiveness;
    return f;
  }
};

/// Constant horizontal force in the world frame from start_time on.
struct WindSpec {
  double speed = 8.0;            // reported wind speed [m/s], informational
  double force_magnitude = 2.0;  // [N]
  Vec3 direction = Vec3::UnitX();
  double start_time = 0.0;

  void validate() const {
    if (std::abs(direction.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("wind direction must be a unit vector");
    if (std::abs(direction[2]) > 1e-9)
      throw std::invalid_argument("wind direction must be horizontal");
    if (force_magnitude < 0.0) throw std::invalid_argument("wind force must be >= 0");
  }

  static WindSpec none_preset() {
    WindSpec w;
    w.speed = 0.0;
    w.force_magnitude = 0.0;
    return w;
  }
};

inline double effectiveness(const FaultSpec& spec, double t) {
  double val = 1.0;
  if (t >= spec.start_time) {
    switch (spec.kind) {
      case FaultKind::none:
        break;
      case FaultKind::constant_effectiveness:
        val = spec.lambda_const;
        break;
      case FaultKind::sinusoidal_effectiveness:
        val = spec.bias - spec.amp * std::sin(spec.freq * t);
        break;
    }
  }
  return std::clamp(val, 0.0, 1.0);
}

inline ActuatorCommand apply_fault(const ActuatorCommand& cmd, const FaultSpec& spec, double t) {
  ActuatorCommand eff = cmd;
  eff.zeta[spec.motor_index] *= effectiveness(spec, t);
  return eff;
}

inline Wrench wind_wrench(const WindSpec& spec, double t) {
  Wrench w;
  w.force.setZero();
  w.torque.setZero();
  if (t >= spec.start_time) w.force = spec.force_magnitude * spec.direction;
  return w;
}

}  // namespace trq
