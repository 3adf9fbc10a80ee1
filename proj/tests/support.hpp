#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <initializer_list>
#include <string>

#include "otrf/latent.hpp"
#include "otrf/velocity_fields.hpp"

namespace otrf::testing {

inline LatentState vec(std::initializer_list<double> v) {
  LatentState out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline bool bit_equal(const LatentState& a, const LatentState& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

// Left/right 2D Gaussian modes used throughout the editor tests.
inline FieldRegistry two_gaussian_registry() {
  FieldRegistry reg;
  reg.add_gaussian("left", vec({-2.0, 0.0}), 0.25 * Eigen::MatrixXd::Identity(2, 2));
  reg.add_gaussian("right", vec({2.0, 0.0}), 0.25 * Eigen::MatrixXd::Identity(2, 2));
  return reg;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::path(OTRF_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace otrf::testing
