#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otrf/bounds.hpp"
#include "otrf/config.hpp"
#include "otrf/editors.hpp"
#include "otrf/errors.hpp"

namespace otrf {

// Averages over all inputs of one experiment. w2_to_target is NaN when the
// run has no target cloud of matching size.
struct RunMetrics {
  double reconstruction_l2 = 0.0;
  double displacement_l2 = 0.0;
  double transport_work = 0.0;
  double w2_to_target = 0.0;
};

struct ExperimentOutput {
  PointSet inputs;
  PointSet targets;
  PointSet outputs;
  std::vector<Trajectory> trajectories;
  std::vector<EditSummary> summaries;
  std::vector<BoundReport> reports;
  RunMetrics metrics;
};

// Worker count: explicit > 0 wins, then $OTRF_WORKERS, then 1.
int resolve_workers(int requested);

// Runs the configured algorithm in memory. Inputs are processed in parallel
// across `workers`; every input uses its own seed derived from (seed, index)
// so results do not depend on the worker count.
ExperimentOutput execute_experiment(const ExperimentConfig& cfg, int workers);

struct RunOutcome {
  ExitCode code = ExitCode::kSuccess;
  std::string message;
  std::vector<std::filesystem::path> files;
};

// execute_experiment + trajectory CSVs, outputs.csv, summary.json,
// bound_report.json (verify) and plot.svg (if enabled) under output_dir.
// Errors are mapped to exit codes, never thrown.
RunOutcome run_experiment(const ExperimentConfig& cfg, int workers);

// Human-readable name of the module an exception came from.
std::string failing_module(const std::exception& e);
ExitCode exit_code_for(const std::exception& e);

}  // namespace otrf
