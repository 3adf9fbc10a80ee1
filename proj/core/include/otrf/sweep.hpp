#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otrf/config.hpp"
#include "otrf/runner.hpp"

namespace otrf {

inline constexpr std::size_t kMaxSweepCells = 100000;

struct SweepAxis {
  std::string field;                // dotted config path
  std::vector<std::string> values;  // YAML scalars as text
};

struct SweepSpec {
  std::string base_yaml;  // base experiment config text
  std::filesystem::path base_dir;
  std::vector<SweepAxis> axes;
  int replicates = 1;
  int workers = 0;
  std::string output = "sweep_results.csv";
};

// YAML with keys: base (path or inline map), axes (list of {field, values}),
// replicates, workers, output.
SweepSpec load_sweep_spec(const std::filesystem::path& path);
SweepSpec parse_sweep_spec(std::string_view text, const std::filesystem::path& base_dir);

struct SweepResult {
  std::string csv;  // header + one row per (cell, replicate)
  std::size_t rows = 0;
  std::size_t failed_rows = 0;
};

// Cartesian product in axis order (last axis fastest), then replicate.
// Cell seeds derive from (base seed, cell index, replicate); failures are
// recorded in the error column and do not stop the sweep.
SweepResult execute_sweep(const SweepSpec& spec, int workers,
                          const Overrides& extra_overrides = {});

// execute_sweep + atomic write of the results CSV. Exit 4 on partial failure.
RunOutcome run_sweep(const SweepSpec& spec, int workers, const std::filesystem::path& out_dir,
                     const Overrides& extra_overrides = {});

}  // namespace otrf
