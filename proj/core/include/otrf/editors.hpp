#pragma once

#include "otrf/condition.hpp"
#include "otrf/flow_core.hpp"
#include "otrf/rng.hpp"
#include "otrf/transport.hpp"
#include "otrf/velocity_fields.hpp"

namespace otrf {

struct InversionEditConfig {
  double eta = 0.0;
  TimeWindow eta_window;
  TransportConfig transport;
  int n_steps = 28;
  ConditionSpec condition_target;
  // Condition used by the standard inversion phase.
  ConditionSpec condition_inversion;
  GuidanceScales scales;

  void validate() const;
};

inline TransportConfig remaining_transport() {
  TransportConfig t;
  t.orientation = ScheduleOrientation::kRemaining;
  return t;
}

struct FlowEditConfig {
  TransportConfig transport = remaining_transport();
  int n_steps = 28;
  ConditionSpec cond_src;
  ConditionSpec cond_tar;
  GuidanceScales scales;
  int n_avg = 1;
  int n_max = 28;
  int n_min = 0;
  RngSeed seed;

  void validate() const;
};

struct EditSummary {
  double reconstruction_l2 = 0.0;  // |output - x_target|
  double displacement_l2 = 0.0;    // |output - x0|
  double transport_work = 0.0;     // sum weight * |clipped direction| * dt
};

struct EditResult {
  LatentState output;
  Trajectory trajectory;
  EditSummary summary;
};

// v_tar + eta (v_ref - v_tar); returns v_tar untouched when eta == 0.
LatentState controller_guided_velocity(const LatentState& v_tar, const LatentState& v_ref,
                                       double eta);

// Transport-guided RF inversion editing. Velocities from the registry are
// forward-process velocities; the denoising loop works with the data-ward
// velocity u = -v_RF, adds the transport term to it, and steps z <- z + dt u.
// With eta = 0 and beta0 = 0 this is bit-identical to rf_denoise from the
// inverted code.
EditResult transport_guided_inversion_edit(const InversionEditConfig& cfg,
                                           const FieldRegistry& registry,
                                           const LatentCodec& codec, const LatentState& x0,
                                           const LatentState& x_target);
// x_target = x0.
EditResult transport_guided_inversion_edit(const InversionEditConfig& cfg,
                                           const FieldRegistry& registry,
                                           const LatentCodec& codec, const LatentState& x0);

// Transport-enhanced FlowEdit. Steps with index k > n_max are skipped, the
// final n_min steps denoise the coupled target state under cond_tar, and the
// steps in between apply the averaged enhanced difference velocity.
EditResult transport_enhanced_flowedit(const FlowEditConfig& cfg, const FieldRegistry& registry,
                                       const LatentCodec& codec, const LatentState& x0);

// Reference FlowEdit without any transport code path; used to check that
// beta_OT = 0 reproduces it exactly.
LatentState baseline_flowedit(const FlowEditConfig& cfg, const FieldRegistry& registry,
                              const LatentCodec& codec, const LatentState& x0);

}  // namespace otrf
