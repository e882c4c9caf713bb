#pragma once

#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trq/scenario.hpp"

namespace trq {

using ordered_json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Suite {
  std::vector<Scenario> scenarios;  // declaration order

  const Scenario& find(const std::string& name) const {
    for (const auto& s : scenarios)
      if (s.name == name) return s;
    throw ConfigError("no scenario named '" + name + "' in config");
  }
};

namespace cfg_detail {

inline void expect_keys(const ordered_json& j, const std::set<std::string>& allowed,
                        const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(path + "." + key + ": unknown key");
}

inline double as_double(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline int as_int(const ordered_json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

inline bool as_bool(const ordered_json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
  return j.get<bool>();
}

inline std::string as_string(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

template <typename Vec>
Vec as_vec(const ordered_json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError(path + ": expected an array of " + std::to_string(n) + " numbers");
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = as_double(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

/// Bound arrays accept null entries meaning "unbounded on this side".
template <typename Vec>
Vec as_bound_vec(const ordered_json& j, int n, double fill, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError(path + ": expected an array of " + std::to_string(n) + " entries");
  Vec v(n);
  for (int i = 0; i < n; ++i)
    v[i] = j[i].is_null() ? fill : as_double(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline void apply_vehicle(const ordered_json& j, VehicleParams& p, const std::string& path) {
  expect_keys(j,
              {"mass", "inertia", "arm_length", "gravity", "thrust_coeffs", "torque_coeffs",
               "throttle_range", "tilt_range"},
              path);
  if (j.contains("mass")) p.mass = as_double(j["mass"], path + ".mass");
  if (j.contains("inertia")) p.inertia_diag = as_vec<Vec3>(j["inertia"], 3, path + ".inertia");
  if (j.contains("arm_length")) p.arm_length = as_double(j["arm_length"], path + ".arm_length");
  if (j.contains("gravity")) p.gravity = as_double(j["gravity"], path + ".gravity");
  if (j.contains("thrust_coeffs"))
    p.thrust_coeffs = as_vec<Vec3>(j["thrust_coeffs"], 3, path + ".thrust_coeffs");
  if (j.contains("torque_coeffs"))
    p.torque_coeffs = as_vec<Vec3>(j["torque_coeffs"], 3, path + ".torque_coeffs");
  if (j.contains("throttle_range"))
    p.throttle_range = as_vec<Eigen::Vector2d>(j["throttle_range"], 2, path + ".throttle_range");
  if (j.contains("tilt_range"))
    p.tilt_range = as_vec<Eigen::Vector2d>(j["tilt_range"], 2, path + ".tilt_range");
}

inline void apply_ocp(const ordered_json& j, OcpConfig& c, const std::string& path) {
  expect_keys(j,
              {"horizon", "dt", "q_diag", "r_diag", "x_min", "x_max", "u_min", "u_max",
               "max_sqp_iters", "kkt_tol", "input_penalty_mode", "state_bound_weight",
               "integrator_substeps"},
              path);
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (j.contains("horizon")) c.horizon = as_int(j["horizon"], path + ".horizon");
  if (j.contains("dt")) c.dt = as_double(j["dt"], path + ".dt");
  if (j.contains("q_diag")) c.q_diag = as_vec<Vec12>(j["q_diag"], 12, path + ".q_diag");
  if (j.contains("r_diag")) c.r_diag = as_vec<Vec8>(j["r_diag"], 8, path + ".r_diag");
  if (j.contains("x_min")) c.x_min = as_bound_vec<Vec12>(j["x_min"], 12, -inf, path + ".x_min");
  if (j.contains("x_max")) c.x_max = as_bound_vec<Vec12>(j["x_max"], 12, inf, path + ".x_max");
  if (j.contains("u_min")) c.u_min = as_vec<Vec8>(j["u_min"], 8, path + ".u_min");
  if (j.contains("u_max")) c.u_max = as_vec<Vec8>(j["u_max"], 8, path + ".u_max");
  if (j.contains("max_sqp_iters")) c.max_sqp_iters = as_int(j["max_sqp_iters"], path + ".max_sqp_iters");
  if (j.contains("kkt_tol")) c.kkt_tol = as_double(j["kkt_tol"], path + ".kkt_tol");
  if (j.contains("input_penalty_mode")) {
    const std::string m = as_string(j["input_penalty_mode"], path + ".input_penalty_mode");
    if (m == "absolute")
      c.input_penalty_mode = InputPenaltyMode::absolute;
    else if (m == "deviation_from_trim")
      c.input_penalty_mode = InputPenaltyMode::deviation_from_trim;
    else
      throw ConfigError(path + ".input_penalty_mode: expected 'absolute' or 'deviation_from_trim'");
  }
  if (j.contains("state_bound_weight"))
    c.state_bound_weight = as_double(j["state_bound_weight"], path + ".state_bound_weight");
  if (j.contains("integrator_substeps"))
    c.integrator_substeps = as_int(j["integrator_substeps"], path + ".integrator_substeps");
}

inline void apply_eso(const ordered_json& j, EsoConfig& c, const std::string& path) {
  expect_keys(j, {"enabled", "omega_o", "alpha"}, path);
  if (j.contains("enabled")) c.enabled = as_bool(j["enabled"], path + ".enabled");
  if (j.contains("omega_o")) c.omega_o = as_double(j["omega_o"], path + ".omega_o");
  if (j.contains("alpha")) {
    const Vec3 a = as_vec<Vec3>(j["alpha"], 3, path + ".alpha");
    c.alpha1 = a[0];
    c.alpha2 = a[1];
    c.alpha3 = a[2];
  }
}

inline void apply_simulation(const ordered_json& j, Scenario& s, const std::string& path) {
  expect_keys(j, {"duration", "control_dt", "sim_dt", "crash_bounds"}, path);
  if (j.contains("duration")) s.duration = as_double(j["duration"], path + ".duration");
  if (j.contains("control_dt")) s.control_dt = as_double(j["control_dt"], path + ".control_dt");
  if (j.contains("sim_dt")) s.sim_dt = as_double(j["sim_dt"], path + ".sim_dt");
  if (j.contains("crash_bounds")) {
    const auto& cb = j["crash_bounds"];
    const std::string cbp = path + ".crash_bounds";
    expect_keys(cb, {"position_limit", "attitude_limit", "min_altitude"}, cbp);
    if (cb.contains("position_limit"))
      s.crash_bounds.position_limit = as_double(cb["position_limit"], cbp + ".position_limit");
    if (cb.contains("attitude_limit"))
      s.crash_bounds.attitude_limit = as_double(cb["attitude_limit"], cbp + ".attitude_limit");
    if (cb.contains("min_altitude"))
      s.crash_bounds.min_altitude = as_double(cb["min_altitude"], cbp + ".min_altitude");
  }
}

inline void apply_trajectory(const ordered_json& j, TrajectoryConfig& c, const std::string& path) {
  expect_keys(j,
              {"kind", "hover_point", "circle_radius", "circle_period", "circle_altitude",
               "eight_amp_x", "eight_amp_y", "eight_period", "eight_altitude", "step_base",
               "step_offset", "step_time", "step_blend", "waypoints",
               "waypoint_segment_duration"},
              path);
  if (j.contains("kind")) {
    const std::string k = as_string(j["kind"], path + ".kind");
    if (k == "hover")
      c.kind = TrajectoryKind::hover;
    else if (k == "step")
      c.kind = TrajectoryKind::step;
    else if (k == "circle")
      c.kind = TrajectoryKind::circle;
    else if (k == "figure_eight")
      c.kind = TrajectoryKind::figure_eight;
    else if (k == "waypoints")
      c.kind = TrajectoryKind::waypoints;
    else
      throw ConfigError(path + ".kind: unknown trajectory kind '" + k + "'");
  }
  if (j.contains("hover_point")) c.hover_point = as_vec<Vec3>(j["hover_point"], 3, path + ".hover_point");
  if (j.contains("circle_radius")) c.circle_radius = as_double(j["circle_radius"], path + ".circle_radius");
  if (j.contains("circle_period")) c.circle_period = as_double(j["circle_period"], path + ".circle_period");
  if (j.contains("circle_altitude"))
    c.circle_altitude = as_double(j["circle_altitude"], path + ".circle_altitude");
  if (j.contains("eight_amp_x")) c.eight_amp_x = as_double(j["eight_amp_x"], path + ".eight_amp_x");
  if (j.contains("eight_amp_y")) c.eight_amp_y = as_double(j["eight_amp_y"], path + ".eight_amp_y");
  if (j.contains("eight_period")) c.eight_period = as_double(j["eight_period"], path + ".eight_period");
  if (j.contains("eight_altitude"))
    c.eight_altitude = as_double(j["eight_altitude"], path + ".eight_altitude");
  if (j.contains("step_base")) c.step_base = as_vec<Vec3>(j["step_base"], 3, path + ".step_base");
  if (j.contains("step_offset")) c.step_offset = as_vec<Vec3>(j["step_offset"], 3, path + ".step_offset");
  if (j.contains("step_time")) c.step_time = as_double(j["step_time"], path + ".step_time");
  if (j.contains("step_blend")) c.step_blend = as_double(j["step_blend"], path + ".step_blend");
  if (j.contains("waypoints")) {
    const auto& w = j["waypoints"];
    if (!w.is_array()) throw ConfigError(path + ".waypoints: expected an array of points");
    c.waypoint_list.clear();
    for (std::size_t i = 0; i < w.size(); ++i)
      c.waypoint_list.push_back(
          as_vec<Vec3>(w[i], 3, path + ".waypoints[" + std::to_string(i) + "]"));
  }
  if (j.contains("waypoint_segment_duration"))
    c.waypoint_segment_duration =
        as_double(j["waypoint_segment_duration"], path + ".waypoint_segment_duration");
}

inline void apply_fault(const ordered_json& j, FaultSpec& f, const std::string& path) {
  if (j.is_string()) {
    const std::string preset = j.get<std::string>();
    if (preset == "no-fault")
      f = FaultSpec::none_preset();
    else if (preset == "fault50")
      f = FaultSpec::fault50_preset();
    else if (preset == "fault-sine")
      f = FaultSpec::fault_sine_preset();
    else
      throw ConfigError(path + ": unknown fault preset '" + preset + "'");
    return;
  }
  expect_keys(j, {"motor_index", "kind", "lambda", "amp", "bias", "freq", "start_time"}, path);
  if (j.contains("motor_index")) f.motor_index = as_int(j["motor_index"], path + ".motor_index");
  if (j.contains("kind")) {
    const std::string k = as_string(j["kind"], path + ".kind");
    if (k == "none")
      f.kind = FaultKind::none;
    else if (k == "constant")
      f.kind = FaultKind::constant_effectiveness;
    else if (k == "sinusoidal")
      f.kind = FaultKind::sinusoidal_effectiveness;
    else
      throw ConfigError(path + ".kind: expected 'none', 'constant' or 'sinusoidal'");
  }
  if (j.contains("lambda")) f.lambda_const = as_double(j["lambda"], path + ".lambda");
  if (j.contains("amp")) f.amp = as_double(j["amp"], path + ".amp");
  if (j.contains("bias")) f.bias = as_double(j["bias"], path + ".bias");
  if (j.contains("freq")) f.freq = as_double(j["freq"], path + ".freq");
  if (j.contains("start_time")) f.start_time = as_double(j["start_time"], path + ".start_time");
}

inline void apply_wind(const ordered_json& j, WindSpec& w, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "none") {
      w = WindSpec::none_preset();
      return;
    }
    throw ConfigError(path + ": only the string 'none' or an object is accepted");
  }
  expect_keys(j, {"speed", "force_magnitude", "direction", "start_time"}, path);
  if (j.contains("speed")) w.speed = as_double(j["speed"], path + ".speed");
  if (j.contains("force_magnitude"))
    w.force_magnitude = as_double(j["force_magnitude"], path + ".force_magnitude");
  if (j.contains("direction")) w.direction = as_vec<Vec3>(j["direction"], 3, path + ".direction");
  if (j.contains("start_time")) w.start_time = as_double(j["start_time"], path + ".start_time");
}

inline void apply_initial_state(const ordered_json& j, Scenario& s, const std::string& path) {
  expect_keys(j, {"p", "v", "eta", "omega"}, path);
  s.has_initial_state = true;
  s.initial_state = State{};
  s.initial_state.p.setZero();
  s.initial_state.v.setZero();
  s.initial_state.eta.setZero();
  s.initial_state.omega.setZero();
  if (j.contains("p")) s.initial_state.p = as_vec<Vec3>(j["p"], 3, path + ".p");
  if (j.contains("v")) s.initial_state.v = as_vec<Vec3>(j["v"], 3, path + ".v");
  if (j.contains("eta")) s.initial_state.eta = as_vec<Vec3>(j["eta"], 3, path + ".eta");
  if (j.contains("omega")) s.initial_state.omega = as_vec<Vec3>(j["omega"], 3, path + ".omega");
}

inline ControllerKind parse_controller(const std::string& name, const std::string& path) {
  if (name == "quad_nmpc") return ControllerKind::quad_nmpc;
  if (name == "trq_nmpc") return ControllerKind::trq_nmpc;
  if (name == "trq_eso_nmpc") return ControllerKind::trq_eso_nmpc;
  throw ConfigError(path + ": unknown controller '" + name +
                    "' (expected quad_nmpc, trq_nmpc or trq_eso_nmpc)");
}

}  // namespace cfg_detail

/// Parse a full configuration document. Top-level sections set suite-wide
/// defaults; each scenario entry may override any of them. Unknown keys
/// anywhere are errors, reported with their dotted path.
inline Suite parse_suite(const ordered_json& doc) {
  using namespace cfg_detail;
  expect_keys(doc, {"vehicle", "ocp", "eso", "simulation", "scenarios"}, "config");

  Scenario base;
  if (doc.contains("vehicle")) apply_vehicle(doc["vehicle"], base.params, "config.vehicle");
  if (doc.contains("ocp")) apply_ocp(doc["ocp"], base.ocp, "config.ocp");
  if (doc.contains("eso")) apply_eso(doc["eso"], base.eso, "config.eso");
  if (doc.contains("simulation")) apply_simulation(doc["simulation"], base, "config.simulation");

  Suite suite;
  if (doc.contains("scenarios")) {
    const auto& scen = doc["scenarios"];
    if (!scen.is_object()) throw ConfigError("config.scenarios: expected an object");
    for (const auto& [name, body] : scen.items()) {
      const std::string path = "config.scenarios." + name;
      expect_keys(body,
                  {"controller", "trajectory", "fault", "wind", "vehicle", "ocp", "eso",
                   "simulation", "initial_state"},
                  path);
      Scenario s = base;
      s.name = name;
      if (!body.contains("controller"))
        throw ConfigError(path + ": missing required key 'controller'");
      s.controller =
          parse_controller(as_string(body["controller"], path + ".controller"), path + ".controller");
      if (body.contains("trajectory"))
        apply_trajectory(body["trajectory"], s.trajectory, path + ".trajectory");
      if (body.contains("fault")) apply_fault(body["fault"], s.fault, path + ".fault");
      if (body.contains("wind")) apply_wind(body["wind"], s.wind, path + ".wind");
      if (body.contains("vehicle")) apply_vehicle(body["vehicle"], s.params, path + ".vehicle");
      if (body.contains("ocp")) apply_ocp(body["ocp"], s.ocp, path + ".ocp");
      if (body.contains("eso")) apply_eso(body["eso"], s.eso, path + ".eso");
      if (body.contains("simulation")) apply_simulation(body["simulation"], s, path + ".simulation");
      if (body.contains("initial_state"))
        apply_initial_state(body["initial_state"], s, path + ".initial_state");
      try {
        s.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
      }
      suite.scenarios.push_back(std::move(s));
    }
  }
  return suite;
}

inline Suite parse_suite_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_suite(doc);
}

inline Suite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_suite_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace trq
