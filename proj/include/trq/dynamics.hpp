#pragma once

#include "trq/allocation.hpp"
#include "trq/model.hpp"
#include "trq/types.hpp"

namespace trq {

/// Full vehicle derivative: actuator wrench from the command, then rigid-body
/// dynamics with the given disturbance (world-frame force, body-frame torque).
inline StateDerivative dynamics(const State& state, const ActuatorCommand& cmd,
                                const Wrench& disturbance, const RotorGeometry& geom,
                                const VehicleParams& params) {
  const Wrench w = actuator_wrench(cmd, geom, params);
  return rigid_body_derivative(state, w.force, w.torque, disturbance, params);
}

/// One classical RK4 step of length h with the command and disturbance held
/// constant over the step.
inline State rk4_step(const State& state, const ActuatorCommand& cmd, const Wrench& disturbance,
                      const RotorGeometry& geom, const VehicleParams& params, double h) {
  const auto f = [&](const State& s) { return dynamics(s, cmd, disturbance, geom, params).vec(); };

  const Vec12 x0 = state.vec();
  const Vec12 k1 = f(state);
  const Vec12 k2 = f(State::from_vec(x0 + 0.5 * h * k1));
  const Vec12 k3 = f(State::from_vec(x0 + 0.5 * h * k2));
  const Vec12 k4 = f(State::from_vec(x0 + h * k3));
  return State::from_vec(x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace trq
