#include "otrf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "otrf/errors.hpp"

namespace otrf {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  int number = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    const std::string_view line =
        pos == std::string_view::npos ? text.substr(start) : text.substr(start, pos - start);
    ++number;
    fn(line, number);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

}  // namespace

PointSet parse_points_csv(std::string_view text, std::string_view source_name) {
  PointSet points;
  Eigen::Index dim = -1;
  bool first = true;
  for_each_line(text, [&](std::string_view raw, int number) {
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    const auto cells = split(line);
    const auto d = static_cast<Eigen::Index>(cells.size());
    if (first) {
      first = false;
      // Optional header row: no cell is numeric.
      double ignored = 0.0;
      if (std::none_of(cells.begin(), cells.end(),
                       [&](std::string_view c) { return parse_number(c, ignored); })) {
        dim = d;
        return;
      }
    }
    if (dim < 0) dim = d;
    if (d != dim) {
      throw ConfigError(std::string(source_name) + ": ragged row (" + std::to_string(d) +
                            " columns, expected " + std::to_string(dim) + ")",
                        number, 1);
    }
    LatentState p(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      double v = 0.0;
      if (!parse_number(cells[static_cast<std::size_t>(i)], v) || !std::isfinite(v)) {
        throw ConfigError(std::string(source_name) + ": cannot parse '" +
                              std::string(cells[static_cast<std::size_t>(i)]) + "'",
                          number, static_cast<int>(i) + 1);
      }
      p[i] = v;
    }
    points.push_back(std::move(p));
  });
  return points;
}

PointSet read_points_csv(const std::filesystem::path& path) {
  return parse_points_csv(read_file(path), path.string());
}

std::string points_to_csv(const PointSet& points) {
  std::string out;
  for (const auto& p : points) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i > 0) out += ',';
      out += format_double(p[i]);
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
  std::string out = "t";
  const Eigen::Index d =
      trajectory.records.empty() ? 0 : trajectory.records.front().z.size();
  for (Eigen::Index i = 0; i < d; ++i) out += ",z_" + std::to_string(i);
  for (Eigen::Index i = 0; i < d; ++i) out += ",v_" + std::to_string(i);
  out += ",transport_norm,weight\n";
  for (const auto& r : trajectory.records) {
    out += format_double(r.t);
    for (Eigen::Index i = 0; i < d; ++i) out += ',' + format_double(r.z[i]);
    for (Eigen::Index i = 0; i < d; ++i) out += ',' + format_double(r.v_applied[i]);
    out += ',' + format_double(r.transport_norm);
    out += ',' + format_double(r.weight);
    out += '\n';
  }
  return out;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv_table(std::string_view text) {
  CsvTable table;
  bool have_header = false;
  for_each_line(text, [&](std::string_view raw, int number) {
    const std::string_view line = trim(raw);
    if (line.empty()) return;
    std::vector<std::string> cells;
    for (auto c : split(line)) cells.emplace_back(c);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      return;
    }
    if (cells.size() != table.header.size()) {
      throw ConfigError("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(table.header.size()),
                        number, 1);
    }
    table.rows.push_back(std::move(cells));
  });
  if (!have_header) throw ConfigError("csv: missing header row");
  return table;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  return parse_csv_table(read_file(path));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static thread_local std::mt19937_64 salt{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(salt() & 0xffffffu);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot rename temp file onto " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace otrf
