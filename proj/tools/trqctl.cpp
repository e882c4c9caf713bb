// trqctl: run and compare closed-loop fault-tolerant control scenarios for a
// tilt-rotor quadcopter. Exit code 0 means every requested run completed
// (crashes are recorded as data); nonzero means a configuration or I/O error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trq/trq.hpp"

namespace {

constexpr int kExitConfigError = 2;

void print_metrics_line(const trq::RunLog& log, const trq::Metrics& m) {
  std::printf("%-24s %-14s pos_rmse %8.4f m  angle_rmse %8.4f rad  yaw_drift %7.4f rad  ",
              log.scenario_name.c_str(), trq::controller_name(log.controller), m.position_rmse,
              m.angle_rmse, m.yaw_drift);
  if (m.crashed)
    std::printf("CRASHED at %.3f s", *m.crash_time);
  else
    std::printf("completed");
  std::printf("  (iters %.1f, %.2f ms/solve)\n", m.mean_solve_iters,
              m.mean_solve_wall_time * 1e3);
}

std::string log_path(const std::string& out_dir, const std::string& stem) {
  return (std::filesystem::path(out_dir) / (stem + "_log.csv")).string();
}

int run_command(const std::string& config_path, const std::string& scenario_name,
                const std::string& out_dir, std::uint64_t seed) {
  const trq::Suite suite = trq::load_suite(config_path);
  std::vector<const trq::Scenario*> selected;
  if (scenario_name.empty()) {
    for (const auto& s : suite.scenarios) selected.push_back(&s);
  } else {
    selected.push_back(&suite.find(scenario_name));
  }
  if (selected.empty()) throw trq::ConfigError("config declares no scenarios");

  std::filesystem::create_directories(out_dir);
  std::vector<std::pair<trq::RunLog, trq::Metrics>> results;
  for (const auto* s : selected) {
    trq::RunLog log = trq::run_scenario(*s, seed);
    trq::Metrics m = trq::compute_metrics(log);
    trq::write_log_csv(log, log_path(out_dir, s->name));
    print_metrics_line(log, m);
    results.emplace_back(std::move(log), m);
  }
  trq::write_metrics_csv(results,
                         (std::filesystem::path(out_dir) / "metrics.csv").string());
  return 0;
}

int compare_command(const std::string& config_path, const std::string& scenario_name,
                    const std::string& out_dir, std::uint64_t seed) {
  const trq::Suite suite = trq::load_suite(config_path);
  if (suite.scenarios.empty()) throw trq::ConfigError("config declares no scenarios");
  const trq::Scenario& base =
      scenario_name.empty() ? suite.scenarios.front() : suite.find(scenario_name);

  std::filesystem::create_directories(out_dir);
  std::vector<std::pair<trq::RunLog, trq::Metrics>> results;
  for (const trq::ControllerKind kind :
       {trq::ControllerKind::quad_nmpc, trq::ControllerKind::trq_nmpc,
        trq::ControllerKind::trq_eso_nmpc}) {
    trq::Scenario s = base;
    s.controller = kind;
    trq::RunLog log = trq::run_scenario(s, seed);
    trq::Metrics m = trq::compute_metrics(log);
    trq::write_log_csv(
        log, log_path(out_dir, s.name + "_" + trq::controller_name(kind)));
    print_metrics_line(log, m);
    results.emplace_back(std::move(log), m);
  }
  trq::write_metrics_csv(
      results, (std::filesystem::path(out_dir) / (base.name + "_compare.csv")).string());
  return 0;
}

int list_command(const std::string& config_path) {
  const trq::Suite suite = trq::load_suite(config_path);
  for (const auto& s : suite.scenarios)
    std::printf("%-24s %-14s %6.1f s\n", s.name.c_str(), trq::controller_name(s.controller),
                s.duration);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tilt-rotor quadcopter fault-tolerant control simulator"};
  app.require_subcommand(1);

  std::string config_path, scenario_name, out_dir = ".";
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run scenarios from a config file");
  run->add_option("--config", config_path, "Config file (JSON)")->required();
  run->add_option("--scenario", scenario_name, "Scenario name (default: all)");
  run->add_option("--out", out_dir, "Output directory for CSV logs");
  run->add_option("--seed", seed, "Reserved; runs are deterministic");

  auto* compare = app.add_subcommand(
      "compare", "Run one scenario under all three controller variants");
  compare->add_option("--config", config_path, "Config file (JSON)")->required();
  compare->add_option("--scenario", scenario_name, "Scenario name (default: first)");
  compare->add_option("--out", out_dir, "Output directory for CSV logs")->required();
  compare->add_option("--seed", seed, "Reserved; runs are deterministic");

  auto* list = app.add_subcommand("list-scenarios", "List scenarios in a config file");
  list->add_option("--config", config_path, "Config file (JSON)")->required();

  auto* version = app.add_subcommand("version", "Print the tool version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, scenario_name, out_dir, seed);
    if (compare->parsed()) return compare_command(config_path, scenario_name, out_dir, seed);
    if (list->parsed()) return list_command(config_path);
    if (version->parsed()) {
      std::printf("trqctl %s\n", TRQ_VERSION_STRING);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  }
  return 0;
}
