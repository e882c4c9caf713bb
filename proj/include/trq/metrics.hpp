#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "trq/scenario.hpp"

namespace trq {

struct Metrics {
  double position_rmse = 0.0;
  double position_max_err = 0.0;
  double roll_rmse = 0.0;
  double pitch_rmse = 0.0;
  double yaw_rmse = 0.0;
  double angle_rmse = 0.0;  // aggregate over the three axes
  double yaw_drift = 0.0;   // max |yaw error| over the whole run, no exclusion
  bool crashed = false;
  std::optional<double> crash_time;
  double mean_solve_iters = 0.0;
  double mean_solve_wall_time = 0.0;  // [s]
};

/// Tracking-error statistics. RMSE-type quantities skip the first
/// `startup_exclusion` seconds to stay insensitive to the initial transient;
/// yaw_drift deliberately covers every sample. A run that ends before the
/// exclusion window is scored on all of its samples.
inline Metrics compute_metrics(const RunLog& log, double startup_exclusion = 2.0) {
  if (log.rows.empty()) throw std::invalid_argument("cannot compute metrics of an empty log");

  Metrics m;
  m.crashed = log.crashed;
  m.crash_time = log.crash_time;

  double sum_p2 = 0.0, sum_r2 = 0.0, sum_q2 = 0.0, sum_y2 = 0.0;
  int n = 0;
  for (const auto& row : log.rows) {
    const double yaw_err = row.state.eta[2] - row.ref.eta[2];
    m.yaw_drift = std::max(m.yaw_drift, std::abs(yaw_err));
    if (row.t < startup_exclusion) continue;
    const double perr = (row.state.p - row.ref.p).norm();
    sum_p2 += perr * perr;
    m.position_max_err = std::max(m.position_max_err, perr);
    const double r = row.state.eta[0] - row.ref.eta[0];
    const double q = row.state.eta[1] - row.ref.eta[1];
    sum_r2 += r * r;
    sum_q2 += q * q;
    sum_y2 += yaw_err * yaw_err;
    ++n;
  }
  if (n == 0) {
    // Run ended inside the exclusion window; score everything instead.
    for (const auto& row : log.rows) {
      const double perr = (row.state.p - row.ref.p).norm();
      sum_p2 += perr * perr;
      m.position_max_err = std::max(m.position_max_err, perr);
      const double r = row.state.eta[0] - row.ref.eta[0];
      const double q = row.state.eta[1] - row.ref.eta[1];
      const double y = row.state.eta[2] - row.ref.eta[2];
      sum_r2 += r * r;
      sum_q2 += q * q;
      sum_y2 += y * y;
      ++n;
    }
  }
  m.position_rmse = std::sqrt(sum_p2 / n);
  m.roll_rmse = std::sqrt(sum_r2 / n);
  m.pitch_rmse = std::sqrt(sum_q2 / n);
  m.yaw_rmse = std::sqrt(sum_y2 / n);
  m.angle_rmse = std::sqrt((sum_r2 + sum_q2 + sum_y2) / n);

  // Solver stats come from the control rows (the terminal row repeats the
  // last solve and would double-count it).
  const std::size_t solves = log.rows.size() - 1;
  if (solves > 0) {
    double iters = 0.0;
    for (std::size_t i = 0; i < solves; ++i) iters += log.rows[i].sqp_iters;
    m.mean_solve_iters = iters / solves;
  }
  if (!log.solve_wall_seconds.empty()) {
    m.mean_solve_wall_time =
        std::accumulate(log.solve_wall_seconds.begin(), log.solve_wall_seconds.end(), 0.0) /
        log.solve_wall_seconds.size();
  }
  return m;
}

}  // namespace trq
