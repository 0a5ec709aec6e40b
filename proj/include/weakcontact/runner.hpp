#ifndef WEAKCONTACT_RUNNER_HPP
#define WEAKCONTACT_RUNNER_HPP

#include <string>

#include "weakcontact/scenario.hpp"

namespace wc {

struct RunOptions {
  std::string out_dir; // overrides scenario run.out; "." if neither is set
  int threads = 1;
  double verify_tol = 0.0; // verify command: base identity tolerance, 0 = default
};

// Executes the scenario's command and writes its fixed-name outputs
// (profile.csv, trajectory.csv, ledger.json, sweep.csv, report.json,
// manifest.json plus .dat/plot.gp companions) into the output directory.
// Returns 0 on success and 1 on verification failure; configuration and
// numerical problems are reported by throwing.
int run_command(const Scenario &s, const RunOptions &opts);

} // namespace wc

#endif
