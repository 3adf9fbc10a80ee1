#pragma once

#include <string_view>
#include <utility>

#include "otrf/latent.hpp"

namespace otrf {

// Which argument the cosine schedule sees.
//   kElapsed:   s = 1 - t   (inversion editing; full strength at t = 1)
//   kRemaining: s = t       (FlowEdit; full strength at t = 0)
enum class ScheduleOrientation { kElapsed, kRemaining };

std::string_view to_string(ScheduleOrientation o);
// Throws ConfigError on anything but "elapsed" / "remaining".
ScheduleOrientation parse_orientation(std::string_view text);

// Closed interval [t_lo, t_hi] of normalized time.
struct TimeWindow {
  double t_hi = 1.0;
  double t_lo = 0.0;

  bool contains(double t) const { return t >= t_lo && t <= t_hi; }
  void validate(std::string_view what) const;
};

struct TransportConfig {
  double beta0 = 0.0;
  double phi = 1.0;
  double delta = 0.01;
  double clip_tau = 10.0;
  ScheduleOrientation orientation = ScheduleOrientation::kElapsed;
  TimeWindow window;

  // Throws ConfigError unless beta0 >= 0, 0 < phi <= 1, delta > 0, tau > 0.
  void validate() const;
};

struct GuidanceSample {
  LatentState direction;  // clipped transport direction
  double raw_norm = 0.0;  // norm before clipping
  double weight = 0.0;    // alpha(t) or gamma(t); 0 when inactive
  bool active = false;
};

// (z_target - z) / max(1 - t, delta)
LatentState transport_direction(const LatentState& z, const LatentState& z_target, double t,
                                double delta);

// 0.5 (1 + cos(min(s/phi, 1) pi)), in [0,1] and nonincreasing in s.
double cosine_schedule(double s, double phi);

// beta0 * S(s_arg, phi) inside the window, 0 outside.
double adaptive_weight(double t, const TransportConfig& cfg);

// Rescales v onto the tau-ball if it lies outside; otherwise returns v as is.
LatentState clip_norm(const LatentState& v, double tau);

// v_base + w * clip(d, tau). Returns v_base untouched (bit-exact) when the
// weight is zero or the direction vanishes.
std::pair<LatentState, GuidanceSample> enhance_velocity(const LatentState& v_base,
                                                        const LatentState& z,
                                                        const LatentState& z_target, double t,
                                                        const TransportConfig& cfg);

}  // namespace otrf
