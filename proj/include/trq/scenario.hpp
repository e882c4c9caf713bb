#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trq/dynamics.hpp"
#include "trq/eso.hpp"
#include "trq/faults.hpp"
#include "trq/nmpc.hpp"
#include "trq/trajectory.hpp"
#include "trq/types.hpp"

namespace trq {

enum class ControllerKind { quad_nmpc, trq_nmpc, trq_eso_nmpc };

inline const char* controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::quad_nmpc: return "quad_nmpc";
    case ControllerKind::trq_nmpc: return "trq_nmpc";
    case ControllerKind::trq_eso_nmpc: return "trq_eso_nmpc";
  }
  return "unknown";
}

/// A run counts as crashed when position leaves the box, roll or pitch exceed
/// the attitude limit, or altitude drops below ground.
struct CrashBounds {
  double position_limit = 50.0;   // [m], symmetric box on each axis
  double attitude_limit = 1.4;    // [rad], roll and pitch
  double min_altitude = 0.0;      // [m]

  bool violated(const State& s) const {
    if (s.p.cwiseAbs().maxCoeff() > position_limit) return true;
    if (std::abs(s.eta[0]) > attitude_limit || std::abs(s.eta[1]) > attitude_limit) return true;
    if (s.p[2] < min_altitude) return true;
    return false;
  }
};

struct Scenario {
  std::string name = "unnamed";
  ControllerKind controller = ControllerKind::trq_eso_nmpc;
  TrajectoryConfig trajectory;
  FaultSpec fault;
  WindSpec wind = WindSpec::none_preset();
  double duration = 30.0;
  double control_dt = 0.1;
  double sim_dt = 0.001;
  VehicleParams params;
  OcpConfig ocp;
  EsoConfig eso;
  CrashBounds crash_bounds;
  bool has_initial_state = false;
  State initial_state;  // used only when has_initial_state

  void validate() const {
    if (duration <= 0.0) throw std::invalid_argument("duration must be positive");
    if (control_dt <= 0.0 || sim_dt <= 0.0)
      throw std::invalid_argument("control_dt and sim_dt must be positive");
    const double ratio = control_dt / sim_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      throw std::invalid_argument("sim_dt must divide control_dt");
    trajectory.validate();
    fault.validate();
    wind.validate();
    params.validate();
    ocp.validate();
    eso.validate();
  }
};

/// One control-step sample: the state the controller saw, what it commanded,
/// what the plant actually received, and solver diagnostics.
struct LogRow {
  double t = 0.0;
  State state;
  ActuatorCommand cmd;
  Vec4 zeta_eff = Vec4::Zero();
  State ref;
  Vec6 eso_e = Vec6::Zero();
  int sqp_iters = 0;
  double kkt_residual = 0.0;
  bool converged = true;
  bool crashed = false;
};

struct RunLog {
  std::string scenario_name;
  ControllerKind controller = ControllerKind::trq_eso_nmpc;
  std::vector<LogRow> rows;
  bool crashed = false;
  std::optional<double> crash_time;
  std::vector<double> solve_wall_seconds;  // per control step, not logged to CSV
};

/// Closed-loop simulation: solve at control_dt, hold the input, integrate the
/// plant (with fault and wind injected) at sim_dt, observers stepping at the
/// plant rate. The seed is part of the interface for forward compatibility;
/// the pipeline has no stochastic elements, so it is unused.
inline RunLog run_scenario(const Scenario& s, std::uint64_t seed = 0) {
  (void)seed;
  s.validate();

  const RotorGeometry geom = RotorGeometry::x_layout(s.params.arm_length);
  const OcpConfig ocp_cfg =
      s.controller == ControllerKind::quad_nmpc ? freeze_tilt(s.ocp) : s.ocp;
  const TrqNmpc nmpc(ocp_cfg, geom, s.params);
  EsoBank bank(s.eso, s.params);
  const bool use_eso = s.controller == ControllerKind::trq_eso_nmpc;

  State state;
  if (s.has_initial_state) {
    state = s.initial_state;
  } else {
    const State r0 = reference(s.trajectory, 0.0).state_ref;
    state.p = r0.p;
    state.v.setZero();
    state.eta = Vec3(0.0, 0.0, r0.eta[2]);
    state.omega.setZero();
  }
  bank.reset(state);

  const int n_sub = static_cast<int>(std::round(s.control_dt / s.sim_dt));
  const int steps = static_cast<int>(std::round(s.duration / s.control_dt));

  RunLog log;
  log.scenario_name = s.name;
  log.controller = s.controller;
  log.rows.reserve(steps + 1);

  ActuatorCommand prev_cmd = nmpc.trim();
  OcpSolution warm;
  bool have_warm = false;
  OcpSolution last_sol;

  for (int i = 0; i < steps && !log.crashed; ++i) {
    const double t = i * s.control_dt;

    const ModelCorrection correction = use_eso ? bank.correction(state) : ModelCorrection{};

    std::vector<State> refs;
    refs.reserve(ocp_cfg.horizon);
    for (int k = 1; k <= ocp_cfg.horizon; ++k)
      refs.push_back(reference(s.trajectory, t + k * ocp_cfg.dt).state_ref);

    const auto t0 = std::chrono::steady_clock::now();
    last_sol = nmpc.solve(state, refs, correction, have_warm ? &warm : nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    log.solve_wall_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

    // A solve that merely hit the iteration cap still yields a feasible,
    // cost-decreasing iterate; only an unusable solve (no finite cost) falls
    // back to the previous command.
    const ActuatorCommand cmd = std::isfinite(last_sol.cost)
                                    ? receding_horizon_input(last_sol, ocp_cfg)
                                    : prev_cmd;
    warm = shift_warm_start(last_sol);
    have_warm = true;

    LogRow row;
    row.t = t;
    row.state = state;
    row.cmd = cmd;
    row.zeta_eff = apply_fault(cmd, s.fault, t).zeta;
    row.ref = reference(s.trajectory, t).state_ref;
    row.eso_e = correction.e;
    row.sqp_iters = last_sol.sqp_iters;
    row.kkt_residual = last_sol.kkt_residual;
    row.converged = last_sol.converged;
    log.rows.push_back(row);
    prev_cmd = cmd;

    const Wrench commanded = actuator_wrench(cmd, geom, s.params);
    for (int j = 0; j < n_sub; ++j) {
      const double ts = t + j * s.sim_dt;
      if (use_eso) bank.step(state, commanded, s.sim_dt);
      const ActuatorCommand eff = apply_fault(cmd, s.fault, ts);
      const Wrench wind = wind_wrench(s.wind, ts);
      bool dead = false;
      try {
        state = rk4_step(state, eff, wind, geom, s.params, s.sim_dt);
        dead = !state.finite() || s.crash_bounds.violated(state);
      } catch (const SingularityError&) {
        dead = true;
      }
      if (dead) {
        log.crashed = true;
        log.crash_time = ts + s.sim_dt;
        break;
      }
    }
  }

  // Terminal row: final state at the end time (or at the crash instant).
  LogRow last;
  last.t = log.crashed ? *log.crash_time : steps * s.control_dt;
  last.state = state;
  last.cmd = prev_cmd;
  last.zeta_eff = apply_fault(prev_cmd, s.fault, last.t).zeta;
  last.ref = reference(s.trajectory, last.t).state_ref;
  last.eso_e = use_eso ? bank.correction(state).e : Vec6::Zero();
  last.sqp_iters = last_sol.sqp_iters;
  last.kkt_residual = last_sol.kkt_residual;
  last.converged = last_sol.converged;
  last.crashed = log.crashed;
  log.rows.push_back(last);
  return log;
}

}  // namespace trq
