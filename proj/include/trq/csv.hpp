#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trq/metrics.hpp"
#include "trq/scenario.hpp"

namespace trq {

inline constexpr const char* kLogCsvHeader =
    "t,p_x,p_y,p_z,v_x,v_y,v_z,roll,pitch,yaw,wx,wy,wz,"
    "ref_px,ref_py,ref_pz,ref_yaw,"
    "zeta1_cmd,zeta2_cmd,zeta3_cmd,zeta4_cmd,"
    "alpha1_cmd,alpha2_cmd,alpha3_cmd,alpha4_cmd,"
    "zeta1_eff,zeta2_eff,zeta3_eff,zeta4_eff,"
    "eso_e1,eso_e2,eso_e3,eso_e4,eso_e5,eso_e6,"
    "sqp_iters,kkt_residual,crashed";

namespace detail {

/// %.9e keeps 10 significant digits, enough for a 1e-9 relative parse-back
/// bound; the fixed exponent form also makes the byte output layout stable.
inline std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

}  // namespace detail

inline void write_log_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kLogCsvHeader << "\n";
  for (const auto& r : log.rows) {
    std::string line = detail::format_float(r.t);
    const auto push = [&line](double v) {
      line += ',';
      line += detail::format_float(v);
    };
    for (int i = 0; i < 3; ++i) push(r.state.p[i]);
    for (int i = 0; i < 3; ++i) push(r.state.v[i]);
    for (int i = 0; i < 3; ++i) push(r.state.eta[i]);
    for (int i = 0; i < 3; ++i) push(r.state.omega[i]);
    for (int i = 0; i < 3; ++i) push(r.ref.p[i]);
    push(r.ref.eta[2]);
    for (int i = 0; i < 4; ++i) push(r.cmd.zeta[i]);
    for (int i = 0; i < 4; ++i) push(r.cmd.tilt[i]);
    for (int i = 0; i < 4; ++i) push(r.zeta_eff[i]);
    for (int i = 0; i < 6; ++i) push(r.eso_e[i]);
    line += ',' + std::to_string(r.sqp_iters);
    line += ',';
    line += detail::format_float(r.kkt_residual);
    line += ',';
    line += r.crashed ? '1' : '0';
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_metrics_csv(const std::vector<std::pair<RunLog, Metrics>>& results,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "scenario,controller,position_rmse,position_max_err,roll_rmse,pitch_rmse,yaw_rmse,"
         "angle_rmse,yaw_drift,crashed,crash_time,mean_solve_iters,mean_solve_wall_time\n";
  for (const auto& [log, m] : results) {
    out << log.scenario_name << ',' << controller_name(log.controller) << ','
        << detail::format_float(m.position_rmse) << ',' << detail::format_float(m.position_max_err)
        << ',' << detail::format_float(m.roll_rmse) << ',' << detail::format_float(m.pitch_rmse)
        << ',' << detail::format_float(m.yaw_rmse) << ',' << detail::format_float(m.angle_rmse)
        << ',' << detail::format_float(m.yaw_drift) << ',' << (m.crashed ? '1' : '0') << ','
        << (m.crash_time ? detail::format_float(*m.crash_time) : std::string("")) << ','
        << detail::format_float(m.mean_solve_iters) << ','
        << detail::format_float(m.mean_solve_wall_time) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Parse a numeric CSV back in (all cells as doubles). Used by the round-trip
/// checks; not a general CSV reader.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(cell.empty() ? 0.0 : std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell '" + cell + "' in " + path);
      }
    }
    if (row.size() != table.header.size())
      throw std::runtime_error("ragged row in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace trq
