#include "otrf/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "otrf/csv.hpp"
#include "otrf/errors.hpp"
#include "otrf/rng.hpp"

namespace otrf {

namespace {

namespace fs = std::filesystem;

std::string node_text(const YAML::Node& n) {
  if (n.IsScalar()) return n.Scalar();
  YAML::Emitter out;
  out << YAML::Flow << n;
  return out.c_str();
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

struct Row {
  std::uint64_t seed = 0;
  RunMetrics metrics;
  std::string error;
};

}  // namespace

SweepSpec parse_sweep_spec(std::string_view text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("sweep spec parse error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root || !root.IsMap()) throw ConfigError("sweep spec must be a mapping", 1, 1);
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (key != "base" && key != "axes" && key != "replicates" && key != "workers" &&
        key != "output") {
      throw ConfigError("sweep spec: unknown key '" + key + "'", kv.first.Mark().line + 1,
                        kv.first.Mark().column + 1);
    }
  }

  SweepSpec spec;
  spec.base_dir = base_dir;
  const YAML::Node base = root["base"];
  if (!base) throw ConfigError("sweep spec: missing 'base'");
  if (base.IsScalar()) {
    const fs::path p = base_dir / base.as<std::string>();
    if (!fs::exists(p)) throw ConfigError("sweep spec: base config not found: " + p.string());
    spec.base_yaml = read_file(p);
    spec.base_dir = p.parent_path();
  } else if (base.IsMap()) {
    YAML::Emitter out;
    out << base;
    spec.base_yaml = out.c_str();
  } else {
    throw ConfigError("sweep spec: 'base' must be a path or a mapping");
  }

  if (const YAML::Node axes = root["axes"]) {
    if (!axes.IsSequence()) throw ConfigError("sweep spec: 'axes' must be a list");
    for (const auto& a : axes) {
      if (!a.IsMap() || !a["field"] || !a["values"] || a.size() != 2) {
        throw ConfigError("sweep spec: each axis needs exactly 'field' and 'values'",
                          a.Mark().line + 1, a.Mark().column + 1);
      }
      SweepAxis axis;
      axis.field = a["field"].as<std::string>();
      if (!a["values"].IsSequence() || a["values"].size() == 0) {
        throw ConfigError("sweep spec: axis '" + axis.field + "' needs a nonempty value list");
      }
      for (const auto& v : a["values"]) axis.values.push_back(node_text(v));
      spec.axes.push_back(std::move(axis));
    }
  }
  try {
    if (root["replicates"]) spec.replicates = root["replicates"].as<int>();
    if (root["workers"]) spec.workers = root["workers"].as<int>();
    if (root["output"]) spec.output = root["output"].as<std::string>();
  } catch (const YAML::Exception& e) {
    throw ConfigError("sweep spec: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (spec.replicates < 1) throw ConfigError("sweep spec: replicates must be >= 1");
  if (spec.workers < 0) throw ConfigError("sweep spec: workers must be >= 0");

  std::size_t cells = 1;
  for (const auto& a : spec.axes) {
    cells *= a.values.size();
    if (cells * static_cast<std::size_t>(spec.replicates) > kMaxSweepCells) {
      throw ConfigError("sweep spec: more than " + std::to_string(kMaxSweepCells) + " runs");
    }
  }
  return spec;
}

SweepSpec load_sweep_spec(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("sweep spec not found: " + path.string());
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_sweep_spec(read_file(path), base);
}

SweepResult execute_sweep(const SweepSpec& spec, int workers, const Overrides& extra_overrides) {
  std::string base_yaml = spec.base_yaml;
  for (const auto& [k, v] : extra_overrides) base_yaml = apply_override_text(base_yaml, k, v);
  // Validates the base and every axis path up front.
  const ExperimentConfig base_cfg = parse_config(base_yaml, spec.base_dir);
  for (const auto& a : spec.axes) {
    parse_config(apply_override_text(base_yaml, a.field, a.values.front()), spec.base_dir);
  }

  std::size_t cells = 1;
  for (const auto& a : spec.axes) cells *= a.values.size();
  const auto reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t total = cells * reps;

  auto cell_values = [&](std::size_t cell) {
    std::vector<const std::string*> vals(spec.axes.size());
    for (std::size_t k = spec.axes.size(); k-- > 0;) {
      const std::size_t m = spec.axes[k].values.size();
      vals[k] = &spec.axes[k].values[cell % m];
      cell /= m;
    }
    return vals;
  };

  std::vector<Row> rows(total);
  auto run_one = [&](std::size_t idx) {
    const std::size_t cell = idx / reps;
    const std::size_t rep = idx % reps;
    Row& row = rows[idx];
    row.seed = derive_seed(base_cfg.seed, cell, rep);
    try {
      std::string yaml = base_yaml;
      const auto vals = cell_values(cell);
      for (std::size_t k = 0; k < spec.axes.size(); ++k) {
        yaml = apply_override_text(yaml, spec.axes[k].field, *vals[k]);
      }
      yaml = apply_override_text(yaml, "seed", std::to_string(row.seed));
      const ExperimentConfig cfg = parse_config(yaml, spec.base_dir);
      const ExperimentOutput out = execute_experiment(cfg, 1);
      row.metrics = out.metrics;
      for (const auto& r : out.reports) {
        if (!r.pass) row.error = std::string(to_string(r.kind)) + " bound failed";
      }
    } catch (const std::exception& e) {
      row.error = failing_module(e) + ": " + e.what();
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers > 0 ? workers : spec.workers)), total);
  if (threads <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < total; i = next++) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  std::string& csv = result.csv;
  for (const auto& a : spec.axes) csv += csv_safe(a.field) + ',';
  csv += "replicate,seed,reconstruction_l2,displacement_l2,transport_work,w2_to_target,error\n";
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Row& row = rows[idx];
    for (const auto* v : cell_values(idx / reps)) csv += csv_safe(*v) + ',';
    csv += std::to_string(idx % reps) + ',' + std::to_string(row.seed) + ',';
    if (row.error.empty() || row.error.find("bound failed") != std::string::npos) {
      csv += format_double(row.metrics.reconstruction_l2) + ',' +
             format_double(row.metrics.displacement_l2) + ',' +
             format_double(row.metrics.transport_work) + ',' +
             format_double(row.metrics.w2_to_target) + ',';
    } else {
      csv += ",,,,";
    }
    csv += csv_safe(row.error) + '\n';
    ++result.rows;
    if (!row.error.empty()) ++result.failed_rows;
  }
  return result;
}

RunOutcome run_sweep(const SweepSpec& spec, int workers, const fs::path& out_dir,
                     const Overrides& extra_overrides) {
  RunOutcome outcome;
  try {
    const SweepResult result = execute_sweep(spec, workers, extra_overrides);
    const fs::path path = out_dir / spec.output;
    write_file_atomic(path, result.csv);
    outcome.files.push_back(path);
    if (result.failed_rows > 0) {
      outcome.code = ExitCode::kPartialSweepFailure;
      outcome.message = std::to_string(result.failed_rows) + " of " +
                        std::to_string(result.rows) + " sweep rows failed";
    }
  } catch (const std::exception& e) {
    outcome.code = exit_code_for(e);
    outcome.message = failing_module(e) + ": " + e.what();
  }
  return outcome;
}

}  // namespace otrf
