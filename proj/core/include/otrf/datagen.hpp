#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otrf/latent.hpp"

namespace otrf {

// One synthetic point set. kind "ring": `count` points evenly spaced on a
// circle (2D); kind "gaussian": `count` seeded draws from N(mean, cov).
struct DataSetSpec {
  std::string name;
  std::string kind;
  int count = 0;
  LatentState center;  // ring centre / gaussian mean
  double radius = 1.0;
  Eigen::MatrixXd cov;
};

struct DataGenSpec {
  std::uint64_t seed = 0;
  std::string output_dir = "data";
  std::vector<DataSetSpec> sets;
};

// YAML: seed, output_dir, sets: [{name, ring: {count, radius, center}} |
// {name, gaussian: {count, mean, cov}}].
DataGenSpec parse_datagen_spec(std::string_view text);
DataGenSpec load_datagen_spec(const std::filesystem::path& path);

// Set i draws from the stream derive_seed(seed, i).
PointSet generate_points(const DataSetSpec& spec, std::uint64_t seed);

// Writes <output_dir>/<name>.csv for every set; returns the paths.
std::vector<std::filesystem::path> write_datasets(const DataGenSpec& spec,
                                                  const std::filesystem::path& output_dir);

}  // namespace otrf
