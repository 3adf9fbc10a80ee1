#pragma once

#include <string>
#include <vector>

#include "otrf/bounds.hpp"
#include "otrf/runner.hpp"

namespace otrf {

std::string bound_reports_to_json(const std::vector<BoundReport>& reports);
std::vector<BoundReport> bound_reports_from_json(const std::string& text);
std::string summary_to_json(const std::string& name, const std::string& algorithm,
                            const ExperimentOutput& output);

}  // namespace otrf
