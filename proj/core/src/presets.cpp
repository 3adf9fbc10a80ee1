#include "otrf/presets.hpp"

#include <array>

namespace otrf {

namespace {

// Per-task inversion-editing settings.
const std::array<InversionPreset, 3> kInversionPresets{{
    {"reconstruction", 1.0, 0.1, 0.3, 0.0, 1.0, 1.0, 28, 7.5, 0.01},
    {"semantic", 1.0, 0.1, 0.3, 0.0, 0.25, 1.0, 28, 7.5, 0.01},
    {"stroke", 0.9, 0.1, 0.3, 0.1, 0.25, 1.0, 28, 7.5, 0.01},
}};

// Per-architecture FlowEdit settings. The SD3 stroke column gives a range
// (0.3-0.7) for beta_OT; the midpoint is used.
const std::array<FlowEditPreset, 6> kFlowEditPresets{{
    {"flux-reconstruction", 1.5, 5.5, 0.9, 1, 24, 0, 1.0, 28, 0.01, 0.3},
    {"flux-semantic", 1.5, 5.5, 0.1, 1, 24, 0, 1.0, 28, 0.01, 0.3},
    {"flux-stroke", 1.5, 5.5, 0.3, 1, 24, 21, 1.0, 28, 0.01, 0.3},
    {"sd3-reconstruction", 3.5, 23.5, 0.1, 1, 33, 0, 1.0, 50, 0.01, 0.3},
    {"sd3-semantic", 3.5, 23.5, 0.1, 1, 33, 0, 1.0, 50, 0.01, 0.3},
    {"sd3-stroke", 3.5, 23.5, 0.5, 1, 33, 30, 1.0, 50, 0.01, 0.3},
}};

}  // namespace

std::optional<InversionPreset> find_inversion_preset(std::string_view name) {
  for (const auto& p : kInversionPresets) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::optional<FlowEditPreset> find_flowedit_preset(std::string_view name) {
  if (name == "flux-like") name = "flux-reconstruction";
  if (name == "sd3-like") name = "sd3-reconstruction";
  for (const auto& p : kFlowEditPresets) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kInversionPresets) out.push_back(p.name);
  for (const auto& p : kFlowEditPresets) out.push_back(p.name);
  out.push_back("flux-like");
  out.push_back("sd3-like");
  return out;
}

}  // namespace otrf
