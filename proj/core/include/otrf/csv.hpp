#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otrf/flow_core.hpp"
#include "otrf/latent.hpp"

namespace otrf {

// Shortest text that round-trips the double ("%.17g" trimmed to the
// shortest exact representation); "nan"/"inf" for non-finite values.
std::string format_double(double value);

// One point per row, d numeric columns, optional header row. Blank lines and lines
// starting with '#' are skipped. Throws ConfigError with the line number on
// ragged rows or unparsable cells.
PointSet read_points_csv(const std::filesystem::path& path);
PointSet parse_points_csv(std::string_view text, std::string_view source_name = "<memory>");
std::string points_to_csv(const PointSet& points);

// Header: t,z_0..z_{d-1},v_0..v_{d-1},transport_norm,weight
std::string trajectory_to_csv(const Trajectory& trajectory);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // -1 if absent.
  int column(std::string_view name) const;
};
// Simple comma-separated table with a header row (no quoting support).
CsvTable parse_csv_table(std::string_view text);
CsvTable read_csv_table(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace otrf
