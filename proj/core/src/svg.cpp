#include "otrf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "otrf/errors.hpp"

namespace otrf {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 56.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  void include(double x, double y, bool& any) {
    if (!any) {
      x0 = x1 = x;
      y0 = y1 = y;
      any = true;
      return;
    }
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void pad() {
    if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
    const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
    x0 -= px; x1 += px; y0 -= py; y1 += py;
  }
  double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double sy(double y) const {
    return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin);
  }
};

std::string header(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
                  "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
                  num(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  }
  return s;
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label) {
  const double left = kMargin, right = kWidth - kMargin;
  const double top = kMargin, bottom = kHeight - kMargin;
  std::string s = "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(right) + "\" y2=\"" +
       num(bottom) + "\"/>\n";
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(left) + "\" y2=\"" +
       num(top) + "\"/>\n";
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s += "<text x=\"" + num(f.sx(xv)) + "\" y=\"" + num(bottom + 16) +
         "\" text-anchor=\"middle\">" + label_num(xv) + "</text>\n";
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(f.sy(yv) + 4) +
         "\" text-anchor=\"end\">" + label_num(yv) + "</text>\n";
  }
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(kHeight / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kHeight / 2) + ")\">" + escape(y_label) + "</text>\n";
  s += "</g>\n";
  return s;
}

}  // namespace

std::string trajectories_svg(const std::vector<Trajectory>& trajectories,
                             const Projection* projection, const std::string& title) {
  Projection p;
  for (const auto& t : trajectories) {
    if (t.records.empty()) continue;
    const Eigen::Index d = t.records.front().z.size();
    if (projection == nullptr && d != 2) {
      throw ConfigError("plot: data is " + std::to_string(d) + "-dimensional; give a projection");
    }
  }
  if (projection != nullptr) p = *projection;

  Frame f;
  bool any = false;
  for (const auto& t : trajectories) {
    for (const auto& r : t.records) {
      if (p.x < 0 || p.y < 0 || p.x >= r.z.size() || p.y >= r.z.size()) {
        throw ConfigError("plot: projection index out of range");
      }
      f.include(r.z[p.x], r.z[p.y], any);
    }
  }
  f.pad();

  std::string s = header(title);
  s += axes(f, "z_" + std::to_string(p.x), "z_" + std::to_string(p.y));
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& recs = trajectories[i].records;
    if (recs.empty()) continue;
    const char* color = kPalette[i % std::size(kPalette)];
    s += "<polyline class=\"trajectory\" fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t k = 0; k < recs.size(); ++k) {
      if (k > 0) s += ' ';
      s += num(f.sx(recs[k].z[p.x])) + "," + num(f.sy(recs[k].z[p.y]));
    }
    s += "\"/>\n";
    const auto& a = recs.front().z;
    const auto& b = recs.back().z;
    s += "<circle class=\"start\" cx=\"" + num(f.sx(a[p.x])) + "\" cy=\"" + num(f.sy(a[p.y])) +
         "\" r=\"3\" fill=\"" + color + "\"/>\n";
    s += "<rect class=\"end\" x=\"" + num(f.sx(b[p.x]) - 3) + "\" y=\"" + num(f.sy(b[p.y]) - 3) +
         "\" width=\"6\" height=\"6\" fill=\"" + color + "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string line_chart_svg(std::vector<ChartPoint> points, const std::string& x_label,
                           const std::string& y_label, const std::string& title) {
  std::stable_sort(points.begin(), points.end(),
                   [](const ChartPoint& a, const ChartPoint& b) { return a.x < b.x; });
  Frame f;
  bool any = false;
  for (const auto& pt : points) {
    if (std::isfinite(pt.x) && std::isfinite(pt.y)) f.include(pt.x, pt.y, any);
  }
  f.pad();
  std::string s = header(title);
  s += axes(f, x_label, y_label);
  std::string poly;
  std::string marks;
  for (const auto& pt : points) {
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y)) continue;
    if (!poly.empty()) poly += ' ';
    poly += num(f.sx(pt.x)) + "," + num(f.sy(pt.y));
    marks += "<circle class=\"point\" cx=\"" + num(f.sx(pt.x)) + "\" cy=\"" + num(f.sy(pt.y)) +
             "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  if (!poly.empty()) {
    s += "<polyline class=\"series\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" +
         poly + "\"/>\n";
  }
  s += marks;
  s += "</svg>\n";
  return s;
}

std::vector<ChartPoint> sweep_chart_points(const CsvTable& table, const std::string& x_column,
                                           const std::string& metric) {
  const int xc = x_column.empty() ? 0 : table.column(x_column);
  const int yc = table.column(metric);
  const int ec = table.column("error");
  if (xc < 0 || table.header.empty()) throw ConfigError("plot: no column '" + x_column + "'");
  if (yc < 0) throw ConfigError("plot: no metric column '" + metric + "'");
  std::map<double, std::pair<double, int>> acc;
  for (const auto& row : table.rows) {
    if (ec >= 0 && !row[static_cast<std::size_t>(ec)].empty()) continue;
    double x = 0.0, y = 0.0;
    try {
      x = std::stod(row[static_cast<std::size_t>(xc)]);
      y = std::stod(row[static_cast<std::size_t>(yc)]);
    } catch (const std::exception&) {
      continue;
    }
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    auto& [sum, n] = acc[x];
    sum += y;
    ++n;
  }
  std::vector<ChartPoint> out;
  for (const auto& [x, sn] : acc) out.push_back({x, sn.first / sn.second});
  return out;
}

Trajectory trajectory_from_csv(const CsvTable& table) {
  if (table.header.empty() || table.header.front() != "t") {
    throw ConfigError("trajectory csv: header must start with 't'");
  }
  std::vector<int> zc, vc;
  for (int i = 0;; ++i) {
    const int c = table.column("z_" + std::to_string(i));
    if (c < 0) break;
    zc.push_back(c);
    vc.push_back(table.column("v_" + std::to_string(i)));
  }
  if (zc.empty()) throw ConfigError("trajectory csv: no z_ columns");
  const int nc = table.column("transport_norm");
  const int wc = table.column("weight");
  Trajectory traj;
  const auto d = static_cast<Eigen::Index>(zc.size());
  for (const auto& row : table.rows) {
    TrajectoryRecord r;
    r.t = std::stod(row[0]);
    r.z.resize(d);
    r.v_applied = LatentState::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      r.z[i] = std::stod(row[static_cast<std::size_t>(zc[static_cast<std::size_t>(i)])]);
      const int v = vc[static_cast<std::size_t>(i)];
      if (v >= 0) r.v_applied[i] = std::stod(row[static_cast<std::size_t>(v)]);
    }
    if (nc >= 0) r.transport_norm = std::stod(row[static_cast<std::size_t>(nc)]);
    if (wc >= 0) r.weight = std::stod(row[static_cast<std::size_t>(wc)]);
    traj.records.push_back(std::move(r));
  }
  return traj;
}

void emit_plot(const std::vector<std::filesystem::path>& inputs,
               const std::filesystem::path& output, const Projection* projection,
               const std::string& metric) {
  std::vector<Trajectory> trajs;
  for (const auto& path : inputs) {
    const CsvTable table = read_csv_table(path);
    if (!table.header.empty() && table.header.front() == "t") {
      trajs.push_back(trajectory_from_csv(table));
      continue;
    }
    if (inputs.size() != 1) throw ConfigError("plot: give a single sweep results CSV");
    const auto pts = sweep_chart_points(table, "", metric);
    write_file_atomic(output, line_chart_svg(pts, table.header.front(), metric,
                                             path.filename().string()));
    return;
  }
  write_file_atomic(output, trajectories_svg(trajs, projection, "trajectories"));
}

}  // namespace otrf
