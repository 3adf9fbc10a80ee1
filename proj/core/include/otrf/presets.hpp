#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace otrf {

// Inversion-editing hyperparameters (one column of the task table).
struct InversionPreset {
  std::string name;
  double eta;
  double beta0;
  double phi;
  double start;  // controller guidance starts at this fraction of denoising
  double stop;   // ...and stops here
  double clip_tau;
  int n_steps;
  double w;
  double delta;
};

// FlowEdit hyperparameters per architecture/task.
struct FlowEditPreset {
  std::string name;
  double w_src;
  double w_tar;
  double beta_ot;
  int n_avg;
  int n_max;
  int n_min;
  double clip_tau;
  int n_steps;
  double delta;
  double phi;
};

// "reconstruction", "semantic", "stroke".
std::optional<InversionPreset> find_inversion_preset(std::string_view name);
// "flux-reconstruction", "flux-semantic", "flux-stroke", "sd3-*"; "flux-like"
// and "sd3-like" alias the reconstruction columns.
std::optional<FlowEditPreset> find_flowedit_preset(std::string_view name);

std::vector<std::string> preset_names();

}  // namespace otrf
