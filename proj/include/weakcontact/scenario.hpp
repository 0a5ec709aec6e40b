#ifndef WEAKCONTACT_SCENARIO_HPP
#define WEAKCONTACT_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "weakcontact/micro.hpp"
#include "weakcontact/pde.hpp"

namespace wc {

// A scenario file is one JSON object with blocks model/grid/drive/protocol/
// run/micro/target as each command requires. The schema is strict: unknown
// keys are rejected and physical parameters have no defaults (run-length and
// tolerance knobs do). A manifest.json written by a previous run can be used
// directly as a scenario; its embedded "scenario" block is unwrapped.
struct Scenario {
  std::string command;

  ModelSpec model;
  bool has_model = false;

  int n_cells = 0;
  bool has_grid = false;

  Drive drive;
  bool has_drive = false;

  DriveSchedule protocol;
  double horizon = 0.0;
  bool has_protocol = false;
  std::vector<double> deltas;

  enum class Init { Stationary, Values };
  Init init = Init::Stationary;
  std::vector<double> init_values; // empty with Init::Values means constant
  double init_constant = 0.0;
  bool init_is_constant = false;
  bool has_initial = false;

  std::vector<double> target_values; // quasipotential target profile
  double target_constant = 0.0;
  bool target_is_constant = false;
  bool has_target = false;

  // run block
  double tol = -1.0; // <0 means per-command default
  std::uint64_t seed = 1;
  std::string out;
  SolverOptions solver;
  bool renormalized = false;

  MicroConfig micro;
  bool has_micro = false;
  bool micro_oracle = false;

  nlohmann::json raw; // exact scenario object, echoed into manifests
};

Scenario parse_scenario(const nlohmann::json &j);
Scenario load_scenario(const std::string &path);

} // namespace wc

#endif
