#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "trq/model.hpp"
#include "trq/types.hpp"

namespace trq {

/// Per-channel observer gains. beta_i are the correction gains of the three
/// stages, alpha_i the error exponents (alpha = 1 makes a stage linear), b0
/// the nominal input-effect coefficient (how much one unit of commanded input
/// accelerates the channel).
struct EsoGains {
  double beta1 = 30.0;
  double beta2 = 300.0;
  double beta3 = 1000.0;
  // Exponents sit near the homogeneity line 2*alpha2 - 1 ~ alpha3; pairs far
  // below it (0.5/0.25 with these betas) limit-cycle instead of converging.
  double alpha1 = 1.0;
  double alpha2 = 0.8;
  double alpha3 = 0.75;
  double b0 = 1.0;

  /// Standard bandwidth parameterization: beta = (3w, 3w^2, w^3).
  static EsoGains from_bandwidth(double omega_o, double b0) {
    EsoGains g;
    g.beta1 = 3.0 * omega_o;
    g.beta2 = 3.0 * omega_o * omega_o;
    g.beta3 = omega_o * omega_o * omega_o;
    g.b0 = b0;
    return g;
  }

  void validate() const {
    if (beta1 <= 0.0 || beta2 <= 0.0 || beta3 <= 0.0)
      throw std::invalid_argument("observer gains beta must be positive");
    for (double a : {alpha1, alpha2, alpha3})
      if (a <= 0.0 || a > 1.0) throw std::invalid_argument("exponents alpha must lie in (0, 1]");
  }
};

/// One channel's estimates: output, its rate, and the lumped extended state
/// (disturbance + fault effect, acceleration units).
struct EsoChannelState {
  double xhat1 = 0.0;
  double xhat2 = 0.0;
  double xhat3 = 0.0;
};

/// |e|^alpha sgn(e): odd, continuous at 0, identity for alpha = 1.
inline double nonlinear_gain(double e, double alpha) {
  if (e == 0.0) return 0.0;
  return std::pow(std::abs(e), alpha) * (e > 0.0 ? 1.0 : -1.0);
}

/// One forward-Euler observer step. All three stages read the pre-step
/// estimates; e = y_meas - xhat1.
inline EsoChannelState eso_step(const EsoChannelState& ch, double y_meas, double u_effect,
                                const EsoGains& gains, double dt) {
  const double e = y_meas - ch.xhat1;
  EsoChannelState next;
  next.xhat1 = ch.xhat1 + dt * (ch.xhat2 + gains.beta1 * nonlinear_gain(e, gains.alpha1));
  next.xhat2 = ch.xhat2 +
               dt * (ch.xhat3 + gains.beta2 * nonlinear_gain(e, gains.alpha2) + gains.b0 * u_effect);
  next.xhat3 = ch.xhat3 + dt * gains.beta3 * nonlinear_gain(e, gains.alpha3);
  return next;
}

/// What the observers hand the controller: per-channel lumped disturbance
/// accelerations e (world x, y, z then body roll, pitch, yaw) and the
/// estimate-minus-measurement output error in state layout
/// [p_err(3), v_err(3), eta_err(3), omega_err(3)].
struct ModelCorrection {
  Vec6 e = Vec6::Zero();
  Vec12 output_error = Vec12::Zero();

  bool finite() const { return e.allFinite() && output_error.allFinite(); }
};

/// Channel order used throughout: x, y, z, roll, pitch, yaw.
inline ModelCorrection build_correction(const std::array<EsoChannelState, 6>& channels,
                                        const State& measured) {
  ModelCorrection c;
  const Vec12 y = measured.vec();
  for (int i = 0; i < 3; ++i) {
    c.e[i] = channels[i].xhat3;
    c.output_error[i] = channels[i].xhat1 - y[i];          // position
    c.output_error[3 + i] = channels[i].xhat2 - y[3 + i];  // velocity
    c.e[3 + i] = channels[3 + i].xhat3;
    c.output_error[6 + i] = channels[3 + i].xhat1 - y[6 + i];   // attitude
    c.output_error[9 + i] = channels[3 + i].xhat2 - y[9 + i];   // body rate
  }
  return c;
}

inline double output_error_cost(const ModelCorrection& correction) {
  return correction.output_error.squaredNorm();
}

struct EsoConfig {
  bool enabled = true;
  double omega_o = 10.0;  // observer bandwidth [rad/s]
  double alpha1 = 1.0;
  double alpha2 = 0.8;
  double alpha3 = 0.75;

  void validate() const {
    if (omega_o <= 0.0) throw std::invalid_argument("omega_o must be positive");
    for (double a : {alpha1, alpha2, alpha3})
      if (a <= 0.0 || a > 1.0) throw std::invalid_argument("exponents alpha must lie in (0, 1]");
  }
};

/// Six independent observers covering position (world) and attitude channels.
/// Steps run at the plant rate between control updates; the commanded wrench
/// is held over each control interval.
class EsoBank {
 public:
  EsoBank(const EsoConfig& cfg, const VehicleParams& params) : params_(params) {
    cfg.validate();
    for (int i = 0; i < 3; ++i) {
      gains_[i] = EsoGains::from_bandwidth(cfg.omega_o, 1.0 / params.mass);
      gains_[3 + i] = EsoGains::from_bandwidth(cfg.omega_o, 1.0 / params.inertia_diag[i]);
    }
    for (auto& g : gains_) {
      g.alpha1 = cfg.alpha1;
      g.alpha2 = cfg.alpha2;
      g.alpha3 = cfg.alpha3;
      g.validate();
    }
  }

  /// Seed estimates from a measurement so runs start with zero output error.
  void reset(const State& measured) {
    const Vec12 y = measured.vec();
    for (int i = 0; i < 3; ++i) {
      channels_[i] = {y[i], y[3 + i], 0.0};
      channels_[3 + i] = {y[6 + i], y[9 + i], 0.0};
    }
  }

  /// Advance all channels by dt given the measured state and the wrench the
  /// controller commanded (body frame). Translational input effect is the
  /// commanded world-frame thrust minus weight; rotational is the commanded
  /// body torque. Gravity is part of the input effect, not the disturbance.
  void step(const State& measured, const Wrench& commanded_body, double dt) {
    const Mat3 r = rotation_from_euler(measured.eta);
    const Vec3 f_world =
        r * commanded_body.force - Vec3(0.0, 0.0, params_.mass * params_.gravity);
    const Vec12 y = measured.vec();
    for (int i = 0; i < 3; ++i) {
      channels_[i] = eso_step(channels_[i], y[i], f_world[i], gains_[i], dt);
      channels_[3 + i] =
          eso_step(channels_[3 + i], y[6 + i], commanded_body.torque[i], gains_[3 + i], dt);
    }
  }

  ModelCorrection correction(const State& measured) const {
    return build_correction(channels_, measured);
  }

  const std::array<EsoChannelState, 6>& channels() const { return channels_; }
  const std::array<EsoGains, 6>& gains() const { return gains_; }

 private:
  VehicleParams params_;
  std::array<EsoGains, 6> gains_{};
  std::array<EsoChannelState, 6> channels_{};
};

}  // namespace trq
