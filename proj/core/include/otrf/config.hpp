#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "otrf/transport.hpp"
#include "otrf/velocity_fields.hpp"

namespace otrf {

enum class Algorithm { kInvertEdit, kFlowEdit, kGenerate, kVerify };

std::string_view to_string(Algorithm a);

struct DatasetBlock {
  enum class Kind { kPoints, kCsv, kGaussian };
  std::string name;
  Kind kind = Kind::kPoints;
  PointSet points;
  std::string csv_path;
  LatentState mean;
  Eigen::MatrixXd cov;
  double weight = 1.0;
};

// Where a list of points comes from: inline, a CSV file, or samples drawn
// from a registered dataset (seeded per run).
struct PointSource {
  PointSet points;
  std::string csv_path;
  std::string sample_dataset;
  int sample_count = 0;

  bool empty() const { return points.empty() && csv_path.empty() && sample_dataset.empty(); }
};

struct GenerateSpec {
  int count = 512;
  std::string condition = "null";
  std::string noise = "iid";  // "iid" or "rotational" (2D only)
  int symmetry = 8;
  std::string reference;  // dataset to measure W2 against; empty = none
};

struct VerifySpec {
  std::vector<std::string> kinds{"discretization", "convergence", "edit_control"};
  std::vector<int> step_counts{16, 32, 64, 128, 256};
  std::vector<double> beta0_list{0.0, 0.1, 0.2, 0.4};
  std::vector<double> edit_beta0_list{0.0, 0.1, 0.2, 0.4, 0.8};
  // Discretization probe: "reference" (conditional-linear toward the first
  // input), "null", or a dataset name.
  std::string field = "reference";
  double beta0 = 0.5;
  double t_end = 0.2;
  double t_local = 0.6;
  int n_fine = 20000;
};

struct PlotSpec {
  bool enabled = false;
  std::vector<int> projection{0, 1};
};

struct ExperimentConfig {
  std::string name;
  Algorithm algorithm = Algorithm::kInvertEdit;
  std::string preset;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int workers = 0;  // 0 = environment / hardware default
  int max_trajectories = 64;

  double t_floor = kDefaultTimeFloor;
  std::vector<DatasetBlock> datasets;
  LatentState codec_scale;   // empty = identity
  LatentState codec_offset;  // empty = zeros

  int n_steps = 28;
  TransportConfig transport;
  GuidanceScales scales;

  // invert_edit
  double eta = 0.0;
  TimeWindow eta_window;
  std::string condition_target = "null";
  std::string condition_inversion = "null";

  // flowedit
  int n_avg = 1;
  int n_max = 28;
  int n_min = 0;
  std::string cond_src = "null";
  std::string cond_tar = "null";

  PointSource inputs;
  std::optional<PointSource> targets;

  GenerateSpec generate;
  VerifySpec verify;
  PlotSpec plot;

  // Directory relative paths resolve against.
  std::filesystem::path base_dir;
};

// key=value pairs applied after preset expansion; keys are dotted paths
// ("transport.beta0", "seed", "inversion.eta_window").
using Overrides = std::vector<std::pair<std::string, std::string>>;

// Parse, expand presets (explicit fields win), apply overrides, validate.
// Throws ConfigError (with line/column for syntax errors) on any problem,
// including unknown keys and missing referenced files.
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {},
                             const std::string& preset_override = {});
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              const Overrides& overrides = {},
                              const std::string& preset_override = {});

// Fully expanded YAML (no preset key), reparseable by parse_config.
std::string serialize_config(const ExperimentConfig& cfg);

// Parse "1.5", "[0.1, 0.2]", "true", ... into a YAML value and assign it at
// `dotted_path` inside a YAML document (used by --set and sweep axes).
std::string apply_override_text(std::string_view yaml_text, const std::string& dotted_path,
                                const std::string& value);

// Builds the registry (loading CSVs relative to base_dir).
FieldRegistry build_registry(const ExperimentConfig& cfg);
LatentCodec build_codec(const ExperimentConfig& cfg, Eigen::Index dimension);
// Materialises a point source; sampling uses `seed`.
PointSet resolve_points(const PointSource& source, const FieldRegistry& registry,
                        const std::filesystem::path& base_dir, std::uint64_t seed);
ConditionSpec parse_condition(const std::string& text);

}  // namespace otrf
