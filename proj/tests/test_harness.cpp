#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <regex>

#include "otrf/config.hpp"
#include "otrf/csv.hpp"
#include "otrf/datagen.hpp"
#include "otrf/report.hpp"
#include "otrf/runner.hpp"
#include "otrf/svg.hpp"
#include "otrf/sweep.hpp"
#include "support.hpp"

using namespace otrf;
using otrf::testing::scratch_dir;
using otrf::testing::vec;

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(OTRF_SOURCE_DIR) / "configs";

ExperimentConfig config_in(const char* file, const fs::path& out, Overrides extra = {}) {
  extra.emplace_back("output_dir", out.string());
  return load_config(kConfigs / file, extra);
}

std::vector<std::pair<std::string, std::string>> dir_contents(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    out.emplace_back(e.path().filename().string(), read_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("flowedit run with equal conditions does not move the inputs") {
  const fs::path out = scratch_dir("harness_flowedit_equal");
  const ExperimentConfig cfg = config_in(
      "flowedit_toy.yaml", out,
      {{"transport.beta0", "0"}, {"flowedit.cond_tar", "left"}, {"plot.enabled", "false"}});
  const RunOutcome r = run_experiment(cfg, 1);
  CHECK(r.code == ExitCode::kSuccess);
  const ExperimentOutput o = execute_experiment(cfg, 1);
  CHECK(o.metrics.displacement_l2 == 0.0);
  CHECK(read_file(out / "summary.json").find("\"displacement_l2\": 0.0") != std::string::npos);
}

TEST_CASE("runs are byte-identical across repeats and worker counts") {
  const fs::path a = scratch_dir("harness_det_a");
  const fs::path b = scratch_dir("harness_det_b");
  const fs::path c = scratch_dir("harness_det_c");
  for (const char* file : {"flowedit_toy.yaml", "anchored_edit.yaml"}) {
    CAPTURE(file);
    REQUIRE(run_experiment(config_in(file, a), 1).code == ExitCode::kSuccess);
    REQUIRE(run_experiment(config_in(file, b), 1).code == ExitCode::kSuccess);
    REQUIRE(run_experiment(config_in(file, c), 4).code == ExitCode::kSuccess);
    const auto ca = dir_contents(a);
    CHECK(ca.size() >= 3);
    CHECK(ca == dir_contents(b));
    CHECK(ca == dir_contents(c));
    CHECK(fs::exists(a / "trajectory_000.csv"));
  }
}

TEST_CASE("verify run on the shipped default config passes") {
  const fs::path out = scratch_dir("harness_verify");
  const RunOutcome r = run_experiment(config_in("verify_default.yaml", out), 2);
  CHECK(r.code == ExitCode::kSuccess);
  const auto reports = bound_reports_from_json(read_file(out / "bound_report.json"));
  REQUIRE(reports.size() == 3);
  for (const auto& rep : reports) {
    CAPTURE(to_string(rep.kind));
    CHECK(rep.pass);
    CHECK(recompute_pass(rep));
  }
}

TEST_CASE("a failing bound gives the verification exit code") {
  const fs::path out = scratch_dir("harness_verify_fail");
  // Probe outside the active transport window: Euler is exact there.
  const RunOutcome r = run_experiment(
      config_in("verify_default.yaml", out,
                {{"verify.t_local", "0.5"}, {"verify.kinds", "[discretization]"}}),
      1);
  CHECK(r.code == ExitCode::kVerificationFailure);
  CHECK(fs::exists(out / "bound_report.json"));
}

TEST_CASE("bound report json round trip") {
  BoundReport r;
  r.kind = BoundKind::kConvergence;
  r.tolerance_used = 0.1;
  r.slope = std::numeric_limits<double>::quiet_NaN();
  r.measured = {{"mean_sq_error", 0.0, 0.25}, {"mean_sq_error", 0.1, 0.3}};
  r.fitted_constants = {{"eps_RF", 0.24}, {"C_transport", 5.0}};
  r.note = "x";
  const std::string text = bound_reports_to_json({r});
  CHECK(text.find("\"slope\": null") != std::string::npos);
  const auto back = bound_reports_from_json(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].kind == r.kind);
  CHECK(std::isnan(back[0].slope));
  CHECK(back[0].measured.size() == 2);
  CHECK(back[0].measured[1].observed == 0.3);
  CHECK(back[0].fitted_constants.at("C_transport") == 5.0);
  CHECK(bound_reports_to_json(back) == text);
}

TEST_CASE("sweep emits one row per cell and replicate in a fixed order") {
  const SweepSpec spec = load_sweep_spec(kConfigs / "sweep_beta0.yaml");
  const SweepResult serial = execute_sweep(spec, 1);
  const SweepResult parallel = execute_sweep(spec, 4);
  CHECK(serial.rows == 44);
  CHECK(serial.failed_rows == 0);
  CHECK(serial.csv == parallel.csv);
  const CsvTable t = parse_csv_table(serial.csv);
  CHECK(t.header == std::vector<std::string>{"transport.beta0", "replicate", "seed",
                                             "reconstruction_l2", "displacement_l2",
                                             "transport_work", "w2_to_target", "error"});
  REQUIRE(t.rows.size() == 44);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(std::stod(t.rows[i][0]) == doctest::Approx(0.1 * static_cast<double>(i / 4)));
    CHECK(t.rows[i][1] == std::to_string(i % 4));
    CHECK(t.rows[i].back().empty());
  }
}

TEST_CASE("two-axis sweep order is lexicographic in axis order") {
  SweepSpec spec = load_sweep_spec(kConfigs / "sweep_beta0.yaml");
  spec.axes = {{"transport.beta0", {"0.1", "0.2"}}, {"inversion.eta", {"0.3", "0.6", "0.9"}}};
  spec.replicates = 2;
  const CsvTable t = parse_csv_table(execute_sweep(spec, 3).csv);
  REQUIRE(t.rows.size() == 12);
  CHECK(t.rows[0][0] == "0.1");
  CHECK(t.rows[0][1] == "0.3");
  CHECK(t.rows[1][1] == "0.3");
  CHECK(t.rows[2][1] == "0.6");
  CHECK(t.rows[6][0] == "0.2");
  CHECK(t.rows[11][1] == "0.9");
}

TEST_CASE("sweep partial failure is recorded and signalled") {
  SweepSpec spec = load_sweep_spec(kConfigs / "sweep_beta0.yaml");
  spec.axes = {{"transport.phi", {"0.3", "0", "0.6"}}};
  spec.replicates = 1;
  const fs::path out = scratch_dir("harness_sweep_fail");
  const RunOutcome r = run_sweep(spec, 2, out);
  CHECK(r.code == ExitCode::kPartialSweepFailure);
  const CsvTable t = read_csv_table(out / spec.output);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].back().empty());
  CHECK_FALSE(t.rows[1].back().empty());
  CHECK(t.rows[1][3].empty());
  CHECK(t.rows[2].back().empty());
}

TEST_CASE("sweep spec validation") {
  CHECK_THROWS_AS(parse_sweep_spec("base: {}\nbogus: 1\n", kConfigs), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("axes: []\n", kConfigs), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("base: missing.yaml\n", kConfigs), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("base: anchored_edit.yaml\nreplicates: 0\n", kConfigs),
                  ConfigError);
  std::string big = "base: anchored_edit.yaml\nreplicates: 2\naxes:\n";
  for (int a = 0; a < 3; ++a) {
    big += "  - field: seed\n    values: [";
    for (int v = 0; v < 50; ++v) big += (v ? "," : "") + std::to_string(v);
    big += "]\n";
  }
  CHECK_THROWS_AS(parse_sweep_spec(big, kConfigs), ConfigError);
  SweepSpec bad = load_sweep_spec(kConfigs / "sweep_beta0.yaml");
  bad.axes = {{"transport.nope", {"1"}}};
  CHECK_THROWS_AS(execute_sweep(bad, 1), ConfigError);
}

TEST_CASE("svg: empty and single trajectory") {
  const std::string empty = trajectories_svg({});
  CHECK(empty.rfind("<svg", 0) == 0);
  CHECK(empty.find("</svg>") != std::string::npos);
  CHECK(empty.find("class=\"axes\"") != std::string::npos);
  CHECK(count(empty, "<polyline") == 0);

  Trajectory line;
  for (int k = 0; k <= 4; ++k) {
    TrajectoryRecord r;
    r.t = 1.0 - k / 4.0;
    r.z = vec({k * 1.0, k * 0.5});
    r.v_applied = vec({1.0, 0.5});
    line.records.push_back(r);
  }
  const std::string one = trajectories_svg({line});
  CHECK(count(one, "class=\"trajectory\"") == 1);
  CHECK(count(one, "class=\"start\"") == 1);
  CHECK(count(one, "class=\"end\"") == 1);
  CHECK(one == trajectories_svg({line}));
}

TEST_CASE("svg: projection rules") {
  Trajectory t3;
  TrajectoryRecord r;
  r.z = vec({1, 2, 3});
  r.v_applied = vec({0, 0, 0});
  t3.records = {r, r};
  CHECK_THROWS_AS(trajectories_svg({t3}), ConfigError);
  const Projection p{0, 2};
  CHECK_NOTHROW(trajectories_svg({t3}, &p));
  const Projection bad{0, 3};
  CHECK_THROWS_AS(trajectories_svg({t3}, &bad), ConfigError);
}

TEST_CASE("svg: sweep chart has one point per value in ascending order") {
  std::string csv = "transport.beta0,replicate,reconstruction_l2,error\n";
  for (int i = 10; i >= 0; --i) {
    for (int rep = 0; rep < 2; ++rep) {
      csv += format_double(i / 10.0) + "," + std::to_string(rep) + "," +
             format_double(i * 0.01 + rep * 0.002) + ",\n";
    }
  }
  csv += "0.5,2,100,failed\n";
  const auto pts = sweep_chart_points(parse_csv_table(csv), "", "reconstruction_l2");
  REQUIRE(pts.size() == 11);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].x == doctest::Approx(i / 10.0));
    CHECK(pts[i].y == doctest::Approx(i * 0.01 + 0.001));
  }
  const std::string svg = line_chart_svg(pts, "transport.beta0", "reconstruction_l2");
  CHECK(count(svg, "class=\"point\"") == 11);
  std::vector<double> xs;
  const std::regex cx("class=\"point\" cx=\"([0-9.]+)\"");
  for (std::sregex_iterator it(svg.begin(), svg.end(), cx), end; it != end; ++it) {
    xs.push_back(std::stod((*it)[1]));
  }
  CHECK(std::is_sorted(xs.begin(), xs.end()));

  const fs::path dir = scratch_dir("harness_plot");
  write_file_atomic(dir / "sweep.csv", csv);
  emit_plot({dir / "sweep.csv"}, dir / "chart.svg", nullptr);
  CHECK(count(read_file(dir / "chart.svg"), "class=\"point\"") == 11);
}

TEST_CASE("trajectory csv schema and round trip") {
  Trajectory t;
  TrajectoryRecord r;
  r.t = 1.0;
  r.z = vec({0.1, -2.0});
  r.v_applied = vec({1.0 / 3.0, 4.0});
  r.transport_norm = 0.5;
  r.weight = 0.25;
  t.records = {r};
  const std::string csv = trajectory_to_csv(t);
  CHECK(csv.substr(0, csv.find('\n')) == "t,z_0,z_1,v_0,v_1,transport_norm,weight");
  const Trajectory back = trajectory_from_csv(parse_csv_table(csv));
  REQUIRE(back.size() == 1);
  CHECK(back.records[0].z == r.z);
  CHECK(back.records[0].v_applied == r.v_applied);
  CHECK(back.records[0].weight == 0.25);

  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  const PointSet pts{vec({1e-300, 2.5}), vec({-0.0, 7})};
  CHECK(parse_points_csv(points_to_csv(pts)) == pts);
}

TEST_CASE("atomic writes leave no temporary files") {
  const fs::path dir = scratch_dir("harness_atomic");
  write_file_atomic(dir / "nested" / "a.txt", "first");
  write_file_atomic(dir / "nested" / "a.txt", "second");
  CHECK(read_file(dir / "nested" / "a.txt") == "second");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "nested")) ++n;
  CHECK(n == 1);
}

TEST_CASE("generated datasets") {
  const DataGenSpec spec = load_datagen_spec(kConfigs / "datasets.yaml");
  const fs::path dir = scratch_dir("harness_datagen");
  const auto paths = write_datasets(spec, dir);
  REQUIRE(paths.size() == 2);
  const PointSet ring = read_points_csv(dir / "ring8.csv");
  REQUIRE(ring.size() == 8);
  for (const auto& p : ring) CHECK(p.norm() == doctest::Approx(0.05));
  CHECK(read_points_csv(dir / "left64.csv").size() == 64);
  CHECK(read_file(dir / "ring8.csv") == read_file(kConfigs / "data" / "ring8.csv"));
  CHECK(read_file(dir / "left64.csv") == read_file(kConfigs / "data" / "left64.csv"));
  CHECK_THROWS_AS(parse_datagen_spec("seed: 1\nsets:\n  - name: x\n    cube: {}\n"), ConfigError);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}
