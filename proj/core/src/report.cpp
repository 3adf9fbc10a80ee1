#include "otrf/report.hpp"

#include <cmath>

#include <json.hpp>

#include "otrf/errors.hpp"

namespace otrf {

namespace {

using nlohmann::ordered_json;

ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double number_from(const ordered_json& j) {
  if (j.is_null()) return std::nan("");
  return j.get<double>();
}

BoundKind kind_from(const std::string& s) {
  for (BoundKind k : {BoundKind::kDiscretization, BoundKind::kConvergence, BoundKind::kEditControl}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("bound report: unknown kind '" + s + "'");
}

}  // namespace

std::string bound_reports_to_json(const std::vector<BoundReport>& reports) {
  ordered_json all = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json j;
    j["bound_kind"] = std::string(to_string(r.kind));
    j["pass"] = r.pass;
    j["tolerance_used"] = r.tolerance_used;
    j["slope"] = number(r.slope);
    j["degenerate"] = r.degenerate;
    ordered_json fitted = ordered_json::object();
    for (const auto& [k, v] : r.fitted_constants) fitted[k] = number(v);
    j["fitted_constants"] = fitted;
    ordered_json measured = ordered_json::array();
    for (const auto& m : r.measured) {
      measured.push_back({{"series", m.series},
                          {"control_value", number(m.control)},
                          {"observed", number(m.observed)}});
    }
    j["measured"] = measured;
    j["note"] = r.note;
    all.push_back(std::move(j));
  }
  ordered_json doc;
  doc["reports"] = std::move(all);
  return doc.dump(2) + "\n";
}

std::vector<BoundReport> bound_reports_from_json(const std::string& text) {
  std::vector<BoundReport> out;
  try {
    const auto doc = ordered_json::parse(text);
    for (const auto& j : doc.at("reports")) {
      BoundReport r;
      r.kind = kind_from(j.at("bound_kind").get<std::string>());
      r.pass = j.at("pass").get<bool>();
      r.tolerance_used = j.at("tolerance_used").get<double>();
      r.slope = number_from(j.at("slope"));
      r.degenerate = j.value("degenerate", false);
      for (const auto& [k, v] : j.at("fitted_constants").items()) {
        r.fitted_constants[k] = number_from(v);
      }
      for (const auto& m : j.at("measured")) {
        r.measured.push_back({m.at("series").get<std::string>(), number_from(m.at("control_value")),
                              number_from(m.at("observed"))});
      }
      r.note = j.value("note", std::string());
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bound report: ") + e.what());
  }
  return out;
}

std::string summary_to_json(const std::string& name, const std::string& algorithm,
                            const ExperimentOutput& output) {
  ordered_json j;
  j["name"] = name;
  j["algorithm"] = algorithm;
  j["inputs"] = output.inputs.size();
  j["outputs"] = output.outputs.size();
  const auto& m = output.metrics;
  j["metrics"] = {{"reconstruction_l2", number(m.reconstruction_l2)},
                  {"displacement_l2", number(m.displacement_l2)},
                  {"transport_work", number(m.transport_work)},
                  {"w2_to_target", number(m.w2_to_target)}};
  ordered_json runs = ordered_json::array();
  for (const auto& s : output.summaries) {
    runs.push_back({{"reconstruction_l2", number(s.reconstruction_l2)},
                    {"displacement_l2", number(s.displacement_l2)},
                    {"transport_work", number(s.transport_work)}});
  }
  j["runs"] = std::move(runs);
  if (!output.reports.empty()) {
    ordered_json bounds = ordered_json::object();
    for (const auto& r : output.reports) bounds[std::string(to_string(r.kind))] = r.pass;
    j["bounds_pass"] = std::move(bounds);
  }
  return j.dump(2) + "\n";
}

}  // namespace otrf
