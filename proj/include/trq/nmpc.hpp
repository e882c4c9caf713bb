#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "trq/allocation.hpp"
#include "trq/dynamics.hpp"
#include "trq/eso.hpp"
#include "trq/ocp.hpp"
#include "trq/types.hpp"

namespace trq {

enum class InputPenaltyMode { absolute, deviation_from_trim };

struct OcpConfig {
  int horizon = 10;
  double dt = 0.1;
  Vec12 q_diag = (Vec12() << 10, 10, 10, 1, 1, 1, 10, 10, 10, 1, 1, 1).finished();
  Vec8 r_diag = (Vec8() << 1e-3, 1e-3, 1e-3, 1e-3, 0.1, 0.1, 0.1, 0.1).finished();
  Vec12 x_min = make_default_x_min();
  Vec12 x_max = make_default_x_max();
  Vec8 u_min = (Vec8() << 0, 0, 0, 0, -M_PI / 2, -M_PI / 2, -M_PI / 2, -M_PI / 2).finished();
  Vec8 u_max = (Vec8() << 100, 100, 100, 100, M_PI / 2, M_PI / 2, M_PI / 2, M_PI / 2).finished();
  int max_sqp_iters = 30;
  double kkt_tol = 1e-6;
  InputPenaltyMode input_penalty_mode = InputPenaltyMode::deviation_from_trim;
  double state_bound_weight = 1000.0;
  int integrator_substeps = 1;  // RK4 substeps per prediction interval

  static Vec12 make_default_x_min() {
    Vec12 v = Vec12::Constant(-std::numeric_limits<double>::infinity());
    v[7] = -1.4;  // pitch, clear of the attitude singularity
    return v;
  }
  static Vec12 make_default_x_max() {
    Vec12 v = Vec12::Constant(std::numeric_limits<double>::infinity());
    v[7] = 1.4;
    return v;
  }

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    if (integrator_substeps < 1) throw std::invalid_argument("integrator_substeps must be >= 1");
    if (max_sqp_iters < 1) throw std::invalid_argument("max_sqp_iters must be >= 1");
    if (kkt_tol <= 0.0) throw std::invalid_argument("kkt_tol must be positive");
    if ((q_diag.array() < 0.0).any() || (r_diag.array() < 0.0).any() || state_bound_weight < 0.0)
      throw std::invalid_argument("weights must be nonnegative");
    if ((u_min.array() > u_max.array()).any() || (x_min.array() > x_max.array()).any())
      throw std::invalid_argument("bounds must satisfy min <= max");
  }
};

/// Pin all four tilt angles at zero: the same optimal control problem a
/// conventional quadcopter faces, with only throttles free.
inline OcpConfig freeze_tilt(OcpConfig cfg) {
  for (int i = 4; i < 8; ++i) {
    cfg.u_min[i] = 0.0;
    cfg.u_max[i] = 0.0;
  }
  return cfg;
}

struct OcpSolution {
  std::vector<ActuatorCommand> inputs;
  std::vector<State> predicted_states;
  double cost = std::numeric_limits<double>::infinity();
  double kkt_residual = std::numeric_limits<double>::infinity();
  int sqp_iters = 0;
  bool converged = false;
  std::vector<double> merit_history;
  double max_defect = std::numeric_limits<double>::infinity();
};

/// One stage of the tracking cost. The ESO output-error term is a constant
/// per solve; it is added at the first stage only (pass correction there).
inline double stage_cost(const State& x, const State& x_ref, const ActuatorCommand& u,
                         const OcpConfig& cfg, const ActuatorCommand& u_trim,
                         const ModelCorrection* correction = nullptr) {
  const Vec12 err = x.vec() - x_ref.vec();
  Vec8 du = u.vec();
  if (cfg.input_penalty_mode == InputPenaltyMode::deviation_from_trim) du -= u_trim.vec();
  double j = err.dot(cfg.q_diag.cwiseProduct(err)) + du.dot(cfg.r_diag.cwiseProduct(du));
  if (correction) j += output_error_cost(*correction);
  return j;
}

/// Receding-horizon controller over the full nonlinear vehicle model. Each
/// solve rolls the prediction forward with the ESO correction applied as an
/// additive disturbance wrench and returns the optimized input sequence.
class TrqNmpc {
 public:
  TrqNmpc(const OcpConfig& cfg, const RotorGeometry& geom, const VehicleParams& params)
      : cfg_(cfg), geom_(geom), params_(params), u_trim_(hover_trim(geom, params)) {
    cfg_.validate();
    params_.validate();
    geom_.validate();
    options_.max_iterations = cfg_.max_sqp_iters;
    options_.kkt_tolerance = cfg_.kkt_tol;
  }

  const ActuatorCommand& trim() const { return u_trim_; }
  const OcpConfig& config() const { return cfg_; }

  OcpSolution solve(const State& x0, const std::vector<State>& refs,
                    const ModelCorrection& correction,
                    const OcpSolution* warm_start = nullptr) const {
    if (static_cast<int>(refs.size()) != cfg_.horizon)
      throw std::invalid_argument("reference sequence length must equal the horizon");

    ShootingProblem p;
    p.nx = 12;
    p.nu = 8;
    p.horizon = cfg_.horizon;
    p.step = [this, correction](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
      return predict(x, u, correction);
    };
    p.x0 = x0.vec();
    p.refs.reserve(refs.size());
    for (const auto& r : refs) p.refs.push_back(r.vec());
    p.q_diag = cfg_.q_diag;
    p.r_diag = cfg_.r_diag;
    p.u_ref = cfg_.input_penalty_mode == InputPenaltyMode::deviation_from_trim
                  ? Vec8(u_trim_.vec())
                  : Vec8(Vec8::Zero());
    p.u_min = cfg_.u_min;
    p.u_max = cfg_.u_max;
    p.x_min = cfg_.x_min;
    p.x_max = cfg_.x_max;
    p.state_bound_weight = cfg_.state_bound_weight;
    p.cost_offset = output_error_cost(correction);

    // Candidate starts: the shifted previous solution, a trim hold, and a
    // hold that cancels the estimated disturbance. The cheapest rollout wins.
    // During violent transients the warm start can roll out into a far more
    // expensive region than a fresh hold, and Gauss-Newton started there
    // burns the whole iteration budget climbing back out.
    std::vector<std::vector<Eigen::VectorXd>> candidates;
    if (warm_start && static_cast<int>(warm_start->inputs.size()) == cfg_.horizon) {
      std::vector<Eigen::VectorXd> g;
      g.reserve(cfg_.horizon);
      for (const auto& u : warm_start->inputs) g.push_back(u.vec());
      candidates.push_back(std::move(g));
    }
    candidates.emplace_back(cfg_.horizon, u_trim_.vec());
    {
      // Feedback rollout of the arresting hold: re-evaluating it at each
      // predicted state arrests the rates early in the horizon and hands
      // authority back as they settle. A constant hold applied across the
      // whole horizon overshoots hard the other way instead.
      std::vector<Eigen::VectorXd> arrest;
      arrest.reserve(cfg_.horizon);
      Eigen::VectorXd xk = p.x0;
      bool ok = true;
      for (int k = 0; k < cfg_.horizon; ++k) {
        const Eigen::VectorXd uk =
            counter_hold(State::from_vec(xk), refs[k], correction).vec();
        arrest.push_back(uk);
        if (k + 1 < cfg_.horizon) {
          try {
            xk = predict(xk, uk, correction);
          } catch (const std::exception&) {
            ok = false;
            break;
          }
        }
      }
      if (ok) candidates.push_back(std::move(arrest));
    }

    // Clamp candidates to the input box up front so the ranking sees exactly
    // the iterate the solver will start from.
    for (auto& g : candidates)
      for (auto& uk : g) uk = uk.cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max);

    const bool trace = std::getenv("TRQ_OCP_TRACE") != nullptr;
    const std::vector<Eigen::VectorXd>* best = &candidates.back();
    double best_cost = std::numeric_limits<double>::infinity();
    for (size_t ci = 0; ci < candidates.size(); ++ci) {
      const auto& g = candidates[ci];
      std::vector<Eigen::VectorXd> states;
      if (!detail::try_rollout(p, g, states)) {
        if (trace) std::fprintf(stderr, " cand %zu rollout failed\n", ci);
        continue;
      }
      const double c = detail::rollout_cost(p, states, g);
      if (trace) std::fprintf(stderr, " cand %zu cost=%.6e\n", ci, c);
      if (c < best_cost) {
        best_cost = c;
        best = &g;
      }
    }
    ShootingSolution s = solve_shooting(p, options_, *best);

    OcpSolution out;
    out.inputs.reserve(s.inputs.size());
    for (const auto& u : s.inputs) out.inputs.push_back(ActuatorCommand::from_vec(u));
    out.predicted_states.reserve(s.states.size());
    for (const auto& x : s.states) out.predicted_states.push_back(State::from_vec(x));
    out.cost = s.cost;
    out.kkt_residual = s.kkt_residual;
    out.sqp_iters = s.iterations;
    out.converged = s.converged;
    out.merit_history = std::move(s.merit_history);
    out.max_defect = s.max_defect;
    return out;
  }

  /// Cascaded recovery law for solver warm-up during violent transients and
  /// saturated regimes: a clamped translational PD plus cancellation of the
  /// estimated lumped accelerations gives the desired specific force, and the
  /// torque damps the body rates toward a rate-limited pull back to the
  /// reference attitude. At large rates the damping term dominates and
  /// arrests the tumble; as rates settle the attitude and position terms
  /// level the vehicle and rejoin the reference. Reduces to hover trim at
  /// rest on the reference with a zero correction.
  ActuatorCommand counter_hold(const State& x0, const State& ref,
                               const ModelCorrection& corr) const {
    constexpr double kRateDamp = 6.0;  // [1/s]; settles rates within ~2 prediction steps
    constexpr double kAttP = 4.0;      // [1/s]; roll/pitch pull-in once rates are arrested
    constexpr double kAttPYaw = 1.0;   // [1/s]; yaw is chased gently, it trades against lift
    constexpr double kRateMax = 6.0;   // [rad/s]; commanded-rate ceiling during recovery
    constexpr double kPosP = 2.0;      // [1/s^2]
    constexpr double kPosD = 3.0;      // [1/s]
    constexpr double kAccLat = 1.0;    // [m/s^2]; lateral demand ceiling; kept small so the
                                       // tilts stay nearly vertical and lift survives
    constexpr double kAccUp = 0.5;     // [m/s^2]; climb demand ceiling; more would saturate
                                       // the rotors and starve the torque channel
    constexpr double kAccDown = 4.0;   // [m/s^2]
    Wrench desired;
    const Mat3 r = rotation_from_euler(x0.eta);
    Vec3 acc_des = -kPosP * (x0.p - ref.p) - kPosD * (x0.v - ref.v);
    acc_des.head<2>() = acc_des.head<2>().cwiseMax(-kAccLat).cwiseMin(kAccLat);
    acc_des[2] = std::clamp(acc_des[2], -kAccDown, kAccUp);
    desired.force = r.transpose() * (params_.mass * (Vec3(0.0, 0.0, params_.gravity) + acc_des -
                                                     Vec3(corr.e.head<3>())));
    Vec3 eta_sat = x0.eta;
    eta_sat[1] = kPredictPitchLimit * std::tanh(eta_sat[1] / kPredictPitchLimit);
    const Mat3 w_inv = euler_rate_matrix(eta_sat).inverse();
    const Vec3 omega_resid = w_inv * Vec3(corr.e.tail<3>());
    Vec3 att_err = x0.eta - ref.eta;
    att_err[0] *= kAttP;
    att_err[1] *= kAttP;
    att_err[2] *= kAttPYaw;
    Vec3 omega_des = -(w_inv * att_err);
    omega_des = omega_des.cwiseMax(-kRateMax).cwiseMin(kRateMax);
    desired.torque =
        x0.omega.cross(params_.inertia_diag.cwiseProduct(x0.omega)) -
        params_.inertia_diag.cwiseProduct(omega_resid + kRateDamp * (x0.omega - omega_des));
    // Post-failure the demand is often infeasible; weight the allocation so
    // roll/pitch torque is served first (a 1 Nm miss tumbles the vehicle in
    // tenths of a second), then lift, then the lateral and yaw components.
    AllocationOptions prio;
    prio.weights << 1.0, 1.0, 3.0, 30.0, 30.0, 3.0;
    return allocate(desired, u_trim_, geom_, params_, prio).command;
  }

  /// Exposed for Jacobian validation: the one-interval prediction map.
  Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const ModelCorrection& correction) const {
    // Clamp to the physical actuator range so finite-difference probes just
    // outside the box stay evaluable; feasible iterates are unaffected.
    ActuatorCommand cmd = ActuatorCommand::from_vec(u).clamped(params_);
    State s = State::from_vec(x);
    const double h = cfg_.dt / cfg_.integrator_substeps;
    for (int i = 0; i < cfg_.integrator_substeps; ++i)
      s = predict_rk4(s, cmd, correction, h);
    return s.vec();
  }

 private:
  // Prediction pitch is saturated short of the attitude singularity so every
  // rollout stays finite: the optimizer then sees a softly-penalized bad
  // region (state_bound_weight) instead of an infinite wall it cannot take
  // gradients through. The saturation is smooth (tanh) because a hard clamp
  // puts gradient kinks exactly where the line search works hardest. The
  // simulated plant keeps the exact throwing model.
  static constexpr double kPredictPitchLimit = 1.45;

  StateDerivative predict_derivative(const State& state, const Wrench& actuator,
                                     const ModelCorrection& corr) const {
    StateDerivative d;
    const Mat3 r = rotation_from_euler(state.eta);
    d.p_dot = state.v;
    d.v_dot = (r * actuator.force) / params_.mass - Vec3(0.0, 0.0, params_.gravity) +
              Vec3(corr.e.head<3>());
    Vec3 eta_sat = state.eta;
    eta_sat[1] = kPredictPitchLimit * std::tanh(eta_sat[1] / kPredictPitchLimit);
    const Mat3 w = euler_rate_matrix(eta_sat);
    d.eta_dot = w * state.omega;
    const Vec3 i_omega = params_.inertia_diag.cwiseProduct(state.omega);
    // The rotational lump is an output-frame (Euler) acceleration residual;
    // mapping it through w's inverse makes the predicted output acceleration
    // match the observer's estimate at the current state.
    d.omega_dot =
        (actuator.torque - state.omega.cross(i_omega)).cwiseQuotient(params_.inertia_diag) +
        w.inverse() * Vec3(corr.e.tail<3>());
    return d;
  }

  State predict_rk4(const State& state, const ActuatorCommand& cmd,
                    const ModelCorrection& corr, double h) const {
    const Wrench w = actuator_wrench(cmd, geom_, params_);
    const auto f = [&](const State& s) { return predict_derivative(s, w, corr).vec(); };
    const Vec12 x0 = state.vec();
    const Vec12 k1 = f(state);
    const Vec12 k2 = f(State::from_vec(x0 + 0.5 * h * k1));
    const Vec12 k3 = f(State::from_vec(x0 + 0.5 * h * k2));
    const Vec12 k4 = f(State::from_vec(x0 + h * k3));
    return State::from_vec(x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }

  OcpConfig cfg_;
  RotorGeometry geom_;
  VehicleParams params_;
  ActuatorCommand u_trim_;
  ShootingOptions options_;
};

inline ActuatorCommand receding_horizon_input(const OcpSolution& sol, const OcpConfig& cfg) {
  if (sol.inputs.empty()) throw std::logic_error("solution has no inputs");
  Vec8 u = sol.inputs.front().vec().cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  return ActuatorCommand::from_vec(u);
}

inline OcpSolution shift_warm_start(const OcpSolution& sol) {
  OcpSolution shifted = sol;
  if (!shifted.inputs.empty()) {
    shifted.inputs.erase(shifted.inputs.begin());
    shifted.inputs.push_back(shifted.inputs.empty() ? sol.inputs.back() : shifted.inputs.back());
  }
  if (shifted.predicted_states.size() > 1) {
    shifted.predicted_states.erase(shifted.predicted_states.begin());
    shifted.predicted_states.push_back(shifted.predicted_states.back());
  }
  return shifted;
}

}  // namespace trq
