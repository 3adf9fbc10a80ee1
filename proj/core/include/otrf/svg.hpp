#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otrf/csv.hpp"
#include "otrf/flow_core.hpp"

namespace otrf {

// 2-coordinate projection of latent vectors.
struct Projection {
  int x = 0;
  int y = 1;
};

// Standalone SVG: one polyline per trajectory with start (circle) and end
// (square) markers. Throws ConfigError if a trajectory's dimension is not 2
// and no projection is given, or if an index is out of range.
std::string trajectories_svg(const std::vector<Trajectory>& trajectories,
                             const Projection* projection = nullptr,
                             const std::string& title = "trajectories");

struct ChartPoint {
  double x = 0.0;
  double y = 0.0;
};

// Line chart; points are drawn in ascending x order.
std::string line_chart_svg(std::vector<ChartPoint> points, const std::string& x_label,
                           const std::string& y_label, const std::string& title = "");

// Sweep CSV -> mean of `metric` per distinct value of `x_column`
// (default: first column), ascending.
std::vector<ChartPoint> sweep_chart_points(const CsvTable& table, const std::string& x_column,
                                           const std::string& metric);

// Reads a trajectory CSV (header starting with "t,") or a sweep results CSV
// and writes the matching SVG.
void emit_plot(const std::vector<std::filesystem::path>& inputs,
               const std::filesystem::path& output, const Projection* projection,
               const std::string& metric = "reconstruction_l2");

Trajectory trajectory_from_csv(const CsvTable& table);

}  // namespace otrf
