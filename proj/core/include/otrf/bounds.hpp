#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "otrf/editors.hpp"
#include "otrf/metrics.hpp"
#include "otrf/transport.hpp"
#include "otrf/velocity_fields.hpp"

namespace otrf {

enum class BoundKind { kDiscretization, kConvergence, kEditControl };

std::string_view to_string(BoundKind kind);

struct Measurement {
  std::string series;  // e.g. "local", "global", "mean_sq_error"
  double control = 0.0;
  double observed = 0.0;
};

struct BoundReport {
  BoundKind kind = BoundKind::kDiscretization;
  std::vector<Measurement> measured;
  std::map<std::string, double> fitted_constants;
  double slope = 0.0;
  bool pass = false;
  double tolerance_used = 0.0;
  // Set when the measurements cannot support a fit (e.g. all-zero errors).
  bool degenerate = false;
  std::string note;
};

// Re-derives `pass` from `measured` and `tolerance_used` alone.
bool recompute_pass(const BoundReport& report);

// The transport-guided ODE in forward time,
//   dz/dt = v(z, t) - alpha(t) clip(d_OT(z, t)),
// whose Euler discretisation is the editing update z <- z + dt (-v + alpha clip(d)).
OdeRhs transport_guided_rhs(const VelocityField& field, ConditionSpec condition,
                            TransportConfig transport, LatentState z_target);

struct DiscretizationSetup {
  const VelocityField* field = nullptr;
  ConditionSpec condition;
  TransportConfig transport;
  LatentState z_init;
  LatentState z_target;
  double t_start = 1.0;
  double t_end = 0.2;
  // Start time of the one-step local error probe.
  double t_local = 0.6;
  // Reference resolution; raised to 10x the largest step count if smaller.
  int n_fine = 20000;
};

// Global error slope expected near 1 (tolerance +-0.2) and local one-step
// slope near 2 (+-0.2), plus adjacent local-error ratios within [3.4, 4.6].
BoundReport verify_discretization_bound(const DiscretizationSetup& setup,
                                        const std::vector<int>& step_counts);

struct InversionBoundSetup {
  const FieldRegistry* registry = nullptr;
  LatentCodec codec = LatentCodec::identity(1);
  InversionEditConfig config;
  PointSet inputs;   // x0 per run
  PointSet targets;  // x_target per run (same size as inputs)
};

inline constexpr std::size_t kMinBoundRuns = 64;

// Fits E|z_out - z_target|^2 = eps_RF + C beta0^2. Passes when eps_RF is
// within 10% of the beta0 = 0 arm, C >= 0 and residuals <= 20% of the range.
BoundReport verify_convergence_bound(const InversionBoundSetup& setup,
                                     const std::vector<double>& beta0_list);

// Mean squared displacement between guided and unguided outputs against
// beta0: log-log slope in [1.5, 2.5], zero displacement at beta0 = 0, and a
// nonnegative envelope K beta0^2 I(phi) + eps_schedule over all points.
BoundReport verify_edit_control_bound(const InversionBoundSetup& setup,
                                      const std::vector<double>& beta0_list, double phi);

// Midpoint quadrature of S(s, phi)^2 over [0, 1] with `panels` panels. Both
// orientations integrate the same function over the unit interval.
double schedule_integral(double phi, ScheduleOrientation orientation, int panels = 10000);

}  // namespace otrf
