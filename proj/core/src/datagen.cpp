#include "otrf/datagen.hpp"

#include <cmath>
#include <numbers>

#include <yaml-cpp/yaml.h>

#include "otrf/csv.hpp"
#include "otrf/errors.hpp"
#include "otrf/rng.hpp"
#include "otrf/velocity_fields.hpp"

namespace otrf {

namespace {

LatentState vec(const YAML::Node& n) {
  const auto v = n.as<std::vector<double>>();
  LatentState out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

Eigen::MatrixXd cov_of(const YAML::Node& n, Eigen::Index d) {
  if (!n) return Eigen::MatrixXd::Identity(d, d);
  if (n.IsScalar()) return n.as<double>() * Eigen::MatrixXd::Identity(d, d);
  if (n.size() > 0 && n[0].IsScalar()) {
    const LatentState diag = vec(n);
    if (diag.size() != d) throw ConfigError("gen-data: covariance diagonal length mismatch");
    return diag.asDiagonal();
  }
  const auto rows = n.as<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(rows.size()) != d) throw ConfigError("gen-data: covariance shape");
  Eigen::MatrixXd c(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != d) {
      throw ConfigError("gen-data: covariance shape");
    }
    for (Eigen::Index j = 0; j < d; ++j) c(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return c;
}

}  // namespace

DataGenSpec parse_datagen_spec(std::string_view text) {
  DataGenSpec spec;
  try {
    const YAML::Node root = YAML::Load(std::string(text));
    if (!root || !root.IsMap()) throw ConfigError("gen-data: spec must be a mapping", 1, 1);
    for (const auto& kv : root) {
      const auto k = kv.first.as<std::string>();
      if (k != "seed" && k != "output_dir" && k != "sets") {
        throw ConfigError("gen-data: unknown key '" + k + "'", kv.first.Mark().line + 1,
                          kv.first.Mark().column + 1);
      }
    }
    if (root["seed"]) spec.seed = root["seed"].as<std::uint64_t>();
    if (root["output_dir"]) spec.output_dir = root["output_dir"].as<std::string>();
    if (!root["sets"] || !root["sets"].IsSequence()) throw ConfigError("gen-data: 'sets' list required");
    for (const auto& s : root["sets"]) {
      DataSetSpec d;
      if (!s["name"]) throw ConfigError("gen-data: set without a name", s.Mark().line + 1, s.Mark().column + 1);
      d.name = s["name"].as<std::string>();
      if (const auto r = s["ring"]) {
        d.kind = "ring";
        d.count = r["count"].as<int>(8);
        d.radius = r["radius"].as<double>(1.0);
        d.center = r["center"] ? vec(r["center"]) : LatentState(LatentState::Zero(2));
        if (d.center.size() != 2) throw ConfigError("gen-data: ring centre must be 2D");
      } else if (const auto g = s["gaussian"]) {
        d.kind = "gaussian";
        d.count = g["count"].as<int>(64);
        if (!g["mean"]) throw ConfigError("gen-data: gaussian needs a mean");
        d.center = vec(g["mean"]);
        d.cov = cov_of(g["cov"], d.center.size());
      } else {
        throw ConfigError("gen-data: set '" + d.name + "' needs 'ring' or 'gaussian'");
      }
      if (d.count < 1) throw ConfigError("gen-data: set '" + d.name + "' needs count >= 1");
      spec.sets.push_back(std::move(d));
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError("gen-data: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  return spec;
}

DataGenSpec load_datagen_spec(const std::filesystem::path& path) {
  return parse_datagen_spec(read_file(path));
}

PointSet generate_points(const DataSetSpec& spec, std::uint64_t seed) {
  PointSet out;
  out.reserve(static_cast<std::size_t>(spec.count));
  if (spec.kind == "ring") {
    for (int i = 0; i < spec.count; ++i) {
      const double a = 2.0 * std::numbers::pi * i / spec.count;
      LatentState p(2);
      p << spec.center[0] + spec.radius * std::cos(a), spec.center[1] + spec.radius * std::sin(a);
      out.push_back(std::move(p));
    }
    return out;
  }
  if (spec.kind == "gaussian") {
    const GaussianComponent g(spec.center, spec.cov);
    NormalStream rng(RngSeed{seed});
    for (int i = 0; i < spec.count; ++i) {
      out.push_back(g.transform_standard(rng.next_vector(g.dimension())));
    }
    return out;
  }
  throw ConfigError("gen-data: unknown kind '" + spec.kind + "'");
}

std::vector<std::filesystem::path> write_datasets(const DataGenSpec& spec,
                                                  const std::filesystem::path& output_dir) {
  std::vector<std::filesystem::path> files;
  for (std::size_t i = 0; i < spec.sets.size(); ++i) {
    const auto& s = spec.sets[i];
    const auto path = output_dir / (s.name + ".csv");
    write_file_atomic(path, points_to_csv(generate_points(s, derive_seed(spec.seed, i))));
    files.push_back(path);
  }
  return files;
}

}  // namespace otrf
