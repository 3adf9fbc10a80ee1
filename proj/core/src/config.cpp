#include "otrf/config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "otrf/csv.hpp"
#include "otrf/errors.hpp"
#include "otrf/presets.hpp"
#include "otrf/rng.hpp"

namespace otrf {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kInvertEdit: return "invert_edit";
    case Algorithm::kFlowEdit: return "flowedit";
    case Algorithm::kGenerate: return "generate";
    case Algorithm::kVerify: return "verify";
  }
  return "unknown";
}

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& what) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) throw ConfigError(what);
  throw ConfigError(what + " (line " + std::to_string(m.line + 1) + ", column " +
                        std::to_string(m.column + 1) + ")",
                    m.line + 1, m.column + 1);
}

void require_map(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) fail_at(node, where + ": expected a mapping");
}

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  require_map(node, where);
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail_at(kv.first, "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& where) {
  if (!node.IsScalar()) fail_at(node, where + ": expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(node, where + ": cannot convert '" + node.Scalar() + "'");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& where) {
  const YAML::Node n = parent[key];
  if (n) out = scalar<T>(n, where.empty() ? key : where + "." + key);
}

template <typename T>
std::vector<T> scalar_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) fail_at(node, where + ": expected a list");
  std::vector<T> out;
  for (const auto& e : node) out.push_back(scalar<T>(e, where));
  return out;
}

LatentState vector_of(const YAML::Node& node, const std::string& where) {
  const auto v = scalar_list<double>(node, where);
  LatentState out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

PointSet point_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) fail_at(node, where + ": expected a list of points");
  PointSet out;
  for (const auto& p : node) out.push_back(vector_of(p, where));
  return out;
}

// Scalar variance, diagonal list, or full matrix.
Eigen::MatrixXd covariance_of(const YAML::Node& node, Eigen::Index d, const std::string& where) {
  if (node.IsScalar()) {
    return scalar<double>(node, where) * Eigen::MatrixXd::Identity(d, d);
  }
  if (!node.IsSequence() || node.size() == 0) fail_at(node, where + ": bad covariance");
  if (node[0].IsScalar()) {
    const LatentState diag = vector_of(node, where);
    if (diag.size() != d) fail_at(node, where + ": diagonal length does not match mean");
    return diag.asDiagonal();
  }
  const PointSet rows = point_list(node, where);
  if (static_cast<Eigen::Index>(rows.size()) != d) fail_at(node, where + ": covariance shape");
  Eigen::MatrixXd cov(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != d) fail_at(node, where + ": covariance shape");
    cov.row(i) = rows[static_cast<std::size_t>(i)].transpose();
  }
  return cov;
}

TimeWindow window_of(const YAML::Node& node, const std::string& where) {
  const auto v = scalar_list<double>(node, where);
  if (v.size() != 2) fail_at(node, where + ": expected [t_lo, t_hi]");
  return TimeWindow{.t_hi = v[1], .t_lo = v[0]};
}

PointSource point_source_of(const YAML::Node& node, const std::string& where) {
  check_keys(node, where, {"points", "csv", "sample"});
  PointSource src;
  int given = 0;
  if (node["points"]) {
    src.points = point_list(node["points"], where + ".points");
    ++given;
  }
  if (node["csv"]) {
    src.csv_path = scalar<std::string>(node["csv"], where + ".csv");
    ++given;
  }
  if (const YAML::Node s = node["sample"]) {
    check_keys(s, where + ".sample", {"dataset", "count"});
    read(s, "dataset", src.sample_dataset, where + ".sample");
    read(s, "count", src.sample_count, where + ".sample");
    if (src.sample_dataset.empty() || src.sample_count < 1) {
      fail_at(s, where + ".sample: needs a dataset and a positive count");
    }
    ++given;
  }
  if (given != 1) fail_at(node, where + ": give exactly one of points, csv, sample");
  return src;
}

DatasetBlock dataset_of(const YAML::Node& node) {
  check_keys(node, "datasets[]", {"name", "points", "csv", "gaussian"});
  DatasetBlock ds;
  read(node, "name", ds.name, "datasets[]");
  if (ds.name.empty()) fail_at(node, "dataset needs a name");
  if (ds.name == "null" || ds.name == "reference") {
    fail_at(node, "dataset name '" + ds.name + "' is reserved");
  }
  const std::string where = "datasets." + ds.name;
  int given = 0;
  if (node["points"]) {
    ds.kind = DatasetBlock::Kind::kPoints;
    ds.points = point_list(node["points"], where + ".points");
    ++given;
  }
  if (node["csv"]) {
    ds.kind = DatasetBlock::Kind::kCsv;
    ds.csv_path = scalar<std::string>(node["csv"], where + ".csv");
    ++given;
  }
  if (const YAML::Node g = node["gaussian"]) {
    check_keys(g, where + ".gaussian", {"mean", "cov", "weight"});
    ds.kind = DatasetBlock::Kind::kGaussian;
    if (!g["mean"]) fail_at(g, where + ".gaussian: missing mean");
    ds.mean = vector_of(g["mean"], where + ".gaussian.mean");
    ds.cov = g["cov"] ? covariance_of(g["cov"], ds.mean.size(), where + ".gaussian.cov")
                      : Eigen::MatrixXd::Identity(ds.mean.size(), ds.mean.size());
    read(g, "weight", ds.weight, where + ".gaussian");
    ++given;
  }
  if (given != 1) fail_at(node, where + ": give exactly one of points, csv, gaussian");
  return ds;
}

void apply_preset(const std::string& name, bool algorithm_given, ExperimentConfig& cfg,
                  const YAML::Node& at) {
  if (const auto p = find_inversion_preset(name)) {
    if (algorithm_given && cfg.algorithm == Algorithm::kFlowEdit) {
      fail_at(at, "preset '" + name + "' is an inversion-editing preset");
    }
    cfg.eta = p->eta;
    cfg.eta_window = TimeWindow{.t_hi = 1.0 - p->start, .t_lo = 1.0 - p->stop};
    cfg.transport.beta0 = p->beta0;
    cfg.transport.phi = p->phi;
    cfg.transport.clip_tau = p->clip_tau;
    cfg.transport.delta = p->delta;
    cfg.n_steps = p->n_steps;
    cfg.scales.w = p->w;
    return;
  }
  if (const auto p = find_flowedit_preset(name)) {
    if (!algorithm_given) cfg.algorithm = Algorithm::kFlowEdit;
    if (cfg.algorithm != Algorithm::kFlowEdit) {
      fail_at(at, "preset '" + name + "' is a FlowEdit preset");
    }
    cfg.scales.w_src = p->w_src;
    cfg.scales.w_tar = p->w_tar;
    cfg.transport.beta0 = p->beta_ot;
    cfg.transport.phi = p->phi;
    cfg.transport.clip_tau = p->clip_tau;
    cfg.transport.delta = p->delta;
    cfg.n_avg = p->n_avg;
    cfg.n_max = p->n_max;
    cfg.n_min = p->n_min;
    cfg.n_steps = p->n_steps;
    return;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  fail_at(at, "unknown preset '" + name + "' (known: " + known + ")");
}

Algorithm parse_algorithm(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "algorithm");
  for (Algorithm a : {Algorithm::kInvertEdit, Algorithm::kFlowEdit, Algorithm::kGenerate,
                      Algorithm::kVerify}) {
    if (s == to_string(a)) return a;
  }
  fail_at(node, "algorithm must be invert_edit, flowedit, generate or verify");
}

void validate(ExperimentConfig& cfg) {
  if (cfg.n_steps < 1) throw ConfigError("grid.n_steps must be >= 1");
  if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
  if (cfg.max_trajectories < 0) throw ConfigError("max_trajectories must be >= 0");
  if (!(cfg.t_floor > 0.0 && cfg.t_floor < 1.0)) throw ConfigError("t_floor must lie in (0, 1)");
  cfg.transport.validate();
  cfg.scales.validate();
  cfg.eta_window.validate("inversion eta");
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) throw ConfigError("inversion.eta must lie in [0, 1]");
  if (cfg.n_avg < 1) throw ConfigError("flowedit.n_avg must be >= 1");
  if (cfg.algorithm == Algorithm::kFlowEdit &&
      !(0 <= cfg.n_min && cfg.n_min <= cfg.n_max && cfg.n_max <= cfg.n_steps)) {
    throw ConfigError("flowedit: need 0 <= n_min <= n_max <= grid.n_steps");
  }
  if (cfg.datasets.empty() && cfg.algorithm != Algorithm::kVerify) {
    throw ConfigError("at least one dataset is required");
  }

  std::set<std::string> names;
  for (const auto& ds : cfg.datasets) {
    if (!names.insert(ds.name).second) throw ConfigError("duplicate dataset '" + ds.name + "'");
    if (ds.kind == DatasetBlock::Kind::kCsv && !fs::exists(cfg.base_dir / ds.csv_path)) {
      throw ConfigError("dataset '" + ds.name + "': file not found: " +
                        (cfg.base_dir / ds.csv_path).string());
    }
  }
  auto check_condition = [&](const std::string& c, const char* key, bool allow_reference) {
    if (c == "null" || names.count(c)) return;
    if (allow_reference && c == "reference") return;
    throw ConfigError(std::string(key) + ": unknown condition '" + c + "'");
  };
  check_condition(cfg.condition_target, "inversion.condition_target", false);
  check_condition(cfg.condition_inversion, "inversion.condition_inversion", false);
  check_condition(cfg.cond_src, "flowedit.cond_src", false);
  check_condition(cfg.cond_tar, "flowedit.cond_tar", false);
  check_condition(cfg.generate.condition, "generate.condition", false);

  auto check_source = [&](const PointSource& s, const char* key) {
    if (!s.csv_path.empty() && !fs::exists(cfg.base_dir / s.csv_path)) {
      throw ConfigError(std::string(key) + ": file not found: " +
                        (cfg.base_dir / s.csv_path).string());
    }
    if (!s.sample_dataset.empty() && !names.count(s.sample_dataset)) {
      throw ConfigError(std::string(key) + ": unknown dataset '" + s.sample_dataset + "'");
    }
  };
  check_source(cfg.inputs, "inputs");
  if (cfg.targets) check_source(*cfg.targets, "targets");
  const bool needs_inputs = cfg.algorithm == Algorithm::kInvertEdit ||
                            cfg.algorithm == Algorithm::kFlowEdit ||
                            cfg.algorithm == Algorithm::kVerify;
  if (needs_inputs && cfg.inputs.empty()) throw ConfigError("inputs are required");

  if (cfg.generate.count < 1) throw ConfigError("generate.count must be >= 1");
  if (cfg.generate.noise != "iid" && cfg.generate.noise != "rotational") {
    throw ConfigError("generate.noise must be 'iid' or 'rotational'");
  }
  if (cfg.generate.symmetry < 1) throw ConfigError("generate.symmetry must be >= 1");
  if (!cfg.generate.reference.empty() && !names.count(cfg.generate.reference)) {
    throw ConfigError("generate.reference: unknown dataset '" + cfg.generate.reference + "'");
  }

  const auto& v = cfg.verify;
  for (const auto& k : v.kinds) {
    if (k != "discretization" && k != "convergence" && k != "edit_control") {
      throw ConfigError("verify.kinds: unknown kind '" + k + "'");
    }
  }
  if (v.step_counts.size() < 2) throw ConfigError("verify.step_counts needs >= 2 entries");
  for (std::size_t i = 0; i < v.step_counts.size(); ++i) {
    if (v.step_counts[i] < 1 || (i > 0 && v.step_counts[i] <= v.step_counts[i - 1])) {
      throw ConfigError("verify.step_counts must be positive and strictly increasing");
    }
  }
  for (const auto* list : {&v.beta0_list, &v.edit_beta0_list}) {
    for (double b : *list) {
      if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("verify beta0 lists must be >= 0");
    }
  }
  if (v.field != "reference" && v.field != "null" && !names.count(v.field)) {
    throw ConfigError("verify.field: unknown field '" + v.field + "'");
  }
  if (!(v.t_end >= 0.0 && v.t_local > v.t_end && v.t_local <= 1.0)) {
    throw ConfigError("verify: need 0 <= t_end < t_local <= 1");
  }
  if (v.n_fine < 1) throw ConfigError("verify.n_fine must be >= 1");
  if (cfg.plot.projection.size() != 2) throw ConfigError("plot.projection needs two indices");
}

YAML::Node load_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("parse error: " + e.msg + " (line " + std::to_string(e.mark.line + 1) +
                          ", column " + std::to_string(e.mark.column + 1) + ")",
                      e.mark.line + 1, e.mark.column + 1);
  }
}

void set_path(YAML::Node root, const std::string& dotted, const YAML::Node& value) {
  std::vector<std::string> parts;
  std::stringstream ss(dotted);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("override: bad key '" + dotted + "'");
    parts.push_back(p);
  }
  if (parts.empty()) throw ConfigError("override: empty key");
  YAML::Node cur = root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = cur[parts[i]];
    if (!next || next.IsNull()) {
      cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = cur[parts[i]];
    } else if (!next.IsMap()) {
      throw ConfigError("override: '" + parts[i] + "' in '" + dotted + "' is not a section");
    }
    cur.reset(next);
  }
  cur[parts.back()] = value;
}

void emit_vector(YAML::Emitter& out, const LatentState& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]);
  out << YAML::EndSeq;
}

void emit_points(YAML::Emitter& out, const PointSet& pts) {
  out << YAML::BeginSeq;
  for (const auto& p : pts) emit_vector(out, p);
  out << YAML::EndSeq;
}

void emit_source(YAML::Emitter& out, const PointSource& s) {
  out << YAML::BeginMap;
  if (!s.points.empty()) {
    out << YAML::Key << "points" << YAML::Value;
    emit_points(out, s.points);
  } else if (!s.csv_path.empty()) {
    out << YAML::Key << "csv" << YAML::Value << s.csv_path;
  } else {
    out << YAML::Key << "sample" << YAML::Value << YAML::BeginMap << YAML::Key << "dataset"
        << YAML::Value << s.sample_dataset << YAML::Key << "count" << YAML::Value
        << s.sample_count << YAML::EndMap;
  }
  out << YAML::EndMap;
}

template <typename T>
void emit_list(YAML::Emitter& out, const std::vector<T>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& e : v) {
    if constexpr (std::is_same_v<T, double>) {
      out << format_double(e);
    } else {
      out << e;
    }
  }
  out << YAML::EndSeq;
}

LatentState sample_dataset(const FieldRegistry& registry, const std::string& name,
                           NormalStream& rng) {
  if (const PointSet* pts = registry.points(name)) {
    return (*pts)[static_cast<std::size_t>(rng.index(pts->size()))];
  }
  if (const GaussianComponent* g = registry.gaussian(name)) {
    return g->transform_standard(rng.next_vector(g->dimension()));
  }
  throw FieldError("unknown dataset '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir,
                              const Overrides& overrides, const std::string& preset_override) {
  YAML::Node root = load_yaml(text);
  if (!root || root.IsNull()) throw ConfigError("empty configuration", 1, 1);
  require_map(root, "config");
  for (const auto& [key, value] : overrides) set_path(root, key, load_yaml(value));
  if (!preset_override.empty()) root["preset"] = preset_override;

  check_keys(root, "",
             {"name", "algorithm", "preset", "seed", "output_dir", "workers", "max_trajectories",
              "t_floor", "datasets", "codec", "grid", "transport", "scales", "inversion",
              "flowedit", "inputs", "targets", "generate", "verify", "plot"});

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  read(root, "name", cfg.name, "");
  const bool algorithm_given = static_cast<bool>(root["algorithm"]);
  if (algorithm_given) cfg.algorithm = parse_algorithm(root["algorithm"]);

  // Presets first, explicit fields afterwards.
  if (root["preset"]) {
    cfg.preset = scalar<std::string>(root["preset"], "preset");
    if (!cfg.preset.empty()) apply_preset(cfg.preset, algorithm_given, cfg, root["preset"]);
  }
  if (cfg.algorithm == Algorithm::kFlowEdit) {
    cfg.transport.orientation = ScheduleOrientation::kRemaining;
  }

  read(root, "seed", cfg.seed, "");
  read(root, "output_dir", cfg.output_dir, "");
  read(root, "workers", cfg.workers, "");
  read(root, "max_trajectories", cfg.max_trajectories, "");
  read(root, "t_floor", cfg.t_floor, "");

  if (const YAML::Node ds = root["datasets"]) {
    if (!ds.IsSequence()) fail_at(ds, "datasets: expected a list");
    for (const auto& d : ds) cfg.datasets.push_back(dataset_of(d));
  }
  if (const YAML::Node c = root["codec"]) {
    check_keys(c, "codec", {"scale", "offset"});
    if (c["scale"]) cfg.codec_scale = vector_of(c["scale"], "codec.scale");
    if (c["offset"]) cfg.codec_offset = vector_of(c["offset"], "codec.offset");
  }
  if (const YAML::Node g = root["grid"]) {
    check_keys(g, "grid", {"n_steps"});
    read(g, "n_steps", cfg.n_steps, "grid");
  }
  if (const YAML::Node t = root["transport"]) {
    check_keys(t, "transport", {"beta0", "phi", "delta", "clip_tau", "orientation", "window"});
    read(t, "beta0", cfg.transport.beta0, "transport");
    read(t, "phi", cfg.transport.phi, "transport");
    read(t, "delta", cfg.transport.delta, "transport");
    read(t, "clip_tau", cfg.transport.clip_tau, "transport");
    if (t["orientation"]) {
      try {
        cfg.transport.orientation =
            parse_orientation(scalar<std::string>(t["orientation"], "transport.orientation"));
      } catch (const ConfigError& e) {
        fail_at(t["orientation"], e.what());
      }
    }
    if (t["window"]) cfg.transport.window = window_of(t["window"], "transport.window");
  }
  if (const YAML::Node s = root["scales"]) {
    check_keys(s, "scales", {"w", "w_src", "w_tar"});
    read(s, "w", cfg.scales.w, "scales");
    read(s, "w_src", cfg.scales.w_src, "scales");
    read(s, "w_tar", cfg.scales.w_tar, "scales");
  }
  if (const YAML::Node i = root["inversion"]) {
    check_keys(i, "inversion", {"eta", "eta_window", "condition_target", "condition_inversion"});
    read(i, "eta", cfg.eta, "inversion");
    if (i["eta_window"]) cfg.eta_window = window_of(i["eta_window"], "inversion.eta_window");
    read(i, "condition_target", cfg.condition_target, "inversion");
    read(i, "condition_inversion", cfg.condition_inversion, "inversion");
  }
  if (const YAML::Node f = root["flowedit"]) {
    check_keys(f, "flowedit", {"n_avg", "n_max", "n_min", "cond_src", "cond_tar"});
    read(f, "n_avg", cfg.n_avg, "flowedit");
    read(f, "n_max", cfg.n_max, "flowedit");
    read(f, "n_min", cfg.n_min, "flowedit");
    read(f, "cond_src", cfg.cond_src, "flowedit");
    read(f, "cond_tar", cfg.cond_tar, "flowedit");
  }
  if (root["inputs"]) cfg.inputs = point_source_of(root["inputs"], "inputs");
  if (root["targets"]) cfg.targets = point_source_of(root["targets"], "targets");
  if (const YAML::Node g = root["generate"]) {
    check_keys(g, "generate", {"count", "condition", "noise", "symmetry", "reference"});
    read(g, "count", cfg.generate.count, "generate");
    read(g, "condition", cfg.generate.condition, "generate");
    read(g, "noise", cfg.generate.noise, "generate");
    read(g, "symmetry", cfg.generate.symmetry, "generate");
    read(g, "reference", cfg.generate.reference, "generate");
  }
  if (const YAML::Node v = root["verify"]) {
    check_keys(v, "verify",
               {"kinds", "step_counts", "beta0_list", "edit_beta0_list", "field", "beta0", "t_end",
                "t_local", "n_fine"});
    auto& vs = cfg.verify;
    if (v["kinds"]) vs.kinds = scalar_list<std::string>(v["kinds"], "verify.kinds");
    if (v["step_counts"]) vs.step_counts = scalar_list<int>(v["step_counts"], "verify.step_counts");
    if (v["beta0_list"]) vs.beta0_list = scalar_list<double>(v["beta0_list"], "verify.beta0_list");
    if (v["edit_beta0_list"]) {
      vs.edit_beta0_list = scalar_list<double>(v["edit_beta0_list"], "verify.edit_beta0_list");
    }
    read(v, "field", vs.field, "verify");
    read(v, "beta0", vs.beta0, "verify");
    read(v, "t_end", vs.t_end, "verify");
    read(v, "t_local", vs.t_local, "verify");
    read(v, "n_fine", vs.n_fine, "verify");
  }
  if (const YAML::Node p = root["plot"]) {
    check_keys(p, "plot", {"enabled", "projection"});
    read(p, "enabled", cfg.plot.enabled, "plot");
    if (p["projection"]) cfg.plot.projection = scalar_list<int>(p["projection"], "plot.projection");
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const Overrides& overrides,
                             const std::string& preset_override) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(read_file(path), base, overrides, preset_override);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << cfg.name;
  out << YAML::Key << "algorithm" << YAML::Value << std::string(to_string(cfg.algorithm));
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir;
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::Key << "max_trajectories" << YAML::Value << cfg.max_trajectories;
  out << YAML::Key << "t_floor" << YAML::Value << format_double(cfg.t_floor);

  out << YAML::Key << "datasets" << YAML::Value << YAML::BeginSeq;
  for (const auto& ds : cfg.datasets) {
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << ds.name;
    switch (ds.kind) {
      case DatasetBlock::Kind::kPoints:
        out << YAML::Key << "points" << YAML::Value;
        emit_points(out, ds.points);
        break;
      case DatasetBlock::Kind::kCsv:
        out << YAML::Key << "csv" << YAML::Value << ds.csv_path;
        break;
      case DatasetBlock::Kind::kGaussian: {
        out << YAML::Key << "gaussian" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "mean" << YAML::Value;
        emit_vector(out, ds.mean);
        out << YAML::Key << "cov" << YAML::Value << YAML::BeginSeq;
        for (Eigen::Index r = 0; r < ds.cov.rows(); ++r) emit_vector(out, ds.cov.row(r).transpose());
        out << YAML::EndSeq;
        out << YAML::Key << "weight" << YAML::Value << format_double(ds.weight);
        out << YAML::EndMap;
        break;
      }
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (cfg.codec_scale.size() > 0 || cfg.codec_offset.size() > 0) {
    out << YAML::Key << "codec" << YAML::Value << YAML::BeginMap;
    if (cfg.codec_scale.size() > 0) {
      out << YAML::Key << "scale" << YAML::Value;
      emit_vector(out, cfg.codec_scale);
    }
    if (cfg.codec_offset.size() > 0) {
      out << YAML::Key << "offset" << YAML::Value;
      emit_vector(out, cfg.codec_offset);
    }
    out << YAML::EndMap;
  }

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap << YAML::Key << "n_steps"
      << YAML::Value << cfg.n_steps << YAML::EndMap;

  const auto& t = cfg.transport;
  out << YAML::Key << "transport" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "beta0" << YAML::Value << format_double(t.beta0);
  out << YAML::Key << "phi" << YAML::Value << format_double(t.phi);
  out << YAML::Key << "delta" << YAML::Value << format_double(t.delta);
  out << YAML::Key << "clip_tau" << YAML::Value << format_double(t.clip_tau);
  out << YAML::Key << "orientation" << YAML::Value << std::string(to_string(t.orientation));
  out << YAML::Key << "window" << YAML::Value;
  emit_list(out, std::vector<double>{t.window.t_lo, t.window.t_hi});
  out << YAML::EndMap;

  out << YAML::Key << "scales" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "w" << YAML::Value << format_double(cfg.scales.w);
  out << YAML::Key << "w_src" << YAML::Value << format_double(cfg.scales.w_src);
  out << YAML::Key << "w_tar" << YAML::Value << format_double(cfg.scales.w_tar);
  out << YAML::EndMap;

  out << YAML::Key << "inversion" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "eta" << YAML::Value << format_double(cfg.eta);
  out << YAML::Key << "eta_window" << YAML::Value;
  emit_list(out, std::vector<double>{cfg.eta_window.t_lo, cfg.eta_window.t_hi});
  out << YAML::Key << "condition_target" << YAML::Value << cfg.condition_target;
  out << YAML::Key << "condition_inversion" << YAML::Value << cfg.condition_inversion;
  out << YAML::EndMap;

  out << YAML::Key << "flowedit" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_avg" << YAML::Value << cfg.n_avg;
  out << YAML::Key << "n_max" << YAML::Value << cfg.n_max;
  out << YAML::Key << "n_min" << YAML::Value << cfg.n_min;
  out << YAML::Key << "cond_src" << YAML::Value << cfg.cond_src;
  out << YAML::Key << "cond_tar" << YAML::Value << cfg.cond_tar;
  out << YAML::EndMap;

  if (!cfg.inputs.empty()) {
    out << YAML::Key << "inputs" << YAML::Value;
    emit_source(out, cfg.inputs);
  }
  if (cfg.targets) {
    out << YAML::Key << "targets" << YAML::Value;
    emit_source(out, *cfg.targets);
  }

  const auto& g = cfg.generate;
  out << YAML::Key << "generate" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "count" << YAML::Value << g.count;
  out << YAML::Key << "condition" << YAML::Value << g.condition;
  out << YAML::Key << "noise" << YAML::Value << g.noise;
  out << YAML::Key << "symmetry" << YAML::Value << g.symmetry;
  out << YAML::Key << "reference" << YAML::Value << g.reference;
  out << YAML::EndMap;

  const auto& v = cfg.verify;
  out << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kinds" << YAML::Value;
  emit_list(out, v.kinds);
  out << YAML::Key << "step_counts" << YAML::Value;
  emit_list(out, v.step_counts);
  out << YAML::Key << "beta0_list" << YAML::Value;
  emit_list(out, v.beta0_list);
  out << YAML::Key << "edit_beta0_list" << YAML::Value;
  emit_list(out, v.edit_beta0_list);
  out << YAML::Key << "field" << YAML::Value << v.field;
  out << YAML::Key << "beta0" << YAML::Value << format_double(v.beta0);
  out << YAML::Key << "t_end" << YAML::Value << format_double(v.t_end);
  out << YAML::Key << "t_local" << YAML::Value << format_double(v.t_local);
  out << YAML::Key << "n_fine" << YAML::Value << v.n_fine;
  out << YAML::EndMap;

  out << YAML::Key << "plot" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << cfg.plot.enabled;
  out << YAML::Key << "projection" << YAML::Value;
  emit_list(out, cfg.plot.projection);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string apply_override_text(std::string_view yaml_text, const std::string& dotted_path,
                                const std::string& value) {
  YAML::Node root = load_yaml(yaml_text);
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("override: document is not a mapping");
  set_path(root, dotted_path, load_yaml(value));
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

FieldRegistry build_registry(const ExperimentConfig& cfg) {
  FieldRegistry reg(cfg.t_floor);
  for (const auto& ds : cfg.datasets) {
    switch (ds.kind) {
      case DatasetBlock::Kind::kPoints: reg.add_points(ds.name, ds.points); break;
      case DatasetBlock::Kind::kCsv:
        reg.add_points(ds.name, read_points_csv(cfg.base_dir / ds.csv_path));
        break;
      case DatasetBlock::Kind::kGaussian: reg.add_gaussian(ds.name, ds.mean, ds.cov, ds.weight); break;
    }
  }
  return reg;
}

LatentCodec build_codec(const ExperimentConfig& cfg, Eigen::Index dimension) {
  if (cfg.codec_scale.size() == 0 && cfg.codec_offset.size() == 0) {
    return LatentCodec::identity(dimension);
  }
  LatentState scale =
      cfg.codec_scale.size() > 0 ? cfg.codec_scale : LatentState(LatentState::Ones(dimension));
  LatentState offset =
      cfg.codec_offset.size() > 0 ? cfg.codec_offset : LatentState(LatentState::Zero(dimension));
  if (scale.size() != dimension || offset.size() != dimension) {
    throw ConfigError("codec: vectors must match the data dimension " + std::to_string(dimension));
  }
  return LatentCodec(std::move(scale), std::move(offset));
}

PointSet resolve_points(const PointSource& source, const FieldRegistry& registry,
                        const fs::path& base_dir, std::uint64_t seed) {
  if (!source.points.empty()) return source.points;
  if (!source.csv_path.empty()) return read_points_csv(base_dir / source.csv_path);
  if (source.sample_dataset.empty()) return {};
  NormalStream rng(RngSeed{seed});
  PointSet out;
  out.reserve(static_cast<std::size_t>(source.sample_count));
  for (int i = 0; i < source.sample_count; ++i) {
    out.push_back(sample_dataset(registry, source.sample_dataset, rng));
  }
  return out;
}

ConditionSpec parse_condition(const std::string& text) {
  if (text == "null" || text.empty()) return ConditionSpec::null();
  if (text == "reference") {
    throw ConfigError("the 'reference' condition needs a state and cannot be parsed from text");
  }
  return ConditionSpec::dataset(text);
}

}  // namespace otrf
