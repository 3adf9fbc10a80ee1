#include "otrf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "otrf/errors.hpp"

namespace otrf {

std::string_view to_string(ScheduleOrientation o) {
  return o == ScheduleOrientation::kElapsed ? "elapsed" : "remaining";
}

ScheduleOrientation parse_orientation(std::string_view text) {
  if (text == "elapsed") return ScheduleOrientation::kElapsed;
  if (text == "remaining") return ScheduleOrientation::kRemaining;
  throw ConfigError("orientation must be 'elapsed' or 'remaining', got '" + std::string(text) + "'");
}

void TimeWindow::validate(std::string_view what) const {
  if (!(t_lo >= 0.0 && t_lo <= t_hi && t_hi <= 1.0)) {
    throw ConfigError(std::string(what) + ": window needs 0 <= t_lo <= t_hi <= 1");
  }
}

void TransportConfig::validate() const {
  if (!(beta0 >= 0.0) || !std::isfinite(beta0)) throw ConfigError("transport: beta0 must be >= 0");
  if (!(phi > 0.0 && phi <= 1.0)) throw ConfigError("transport: phi must lie in (0, 1]");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("transport: delta must be > 0");
  if (!(clip_tau > 0.0) || !std::isfinite(clip_tau)) {
    throw ConfigError("transport: clip_tau must be > 0");
  }
  window.validate("transport");
}

LatentState transport_direction(const LatentState& z, const LatentState& z_target, double t,
                                double delta) {
  require_same_dimension(z, z_target, "transport_direction");
  return (z_target - z) / std::max(1.0 - t, delta);
}

double cosine_schedule(double s, double phi) {
  if (!(phi > 0.0)) throw ConfigError("cosine_schedule: phi must be > 0");
  const double progress = std::min(s / phi, 1.0);
  return 0.5 * (1.0 + std::cos(progress * std::numbers::pi));
}

double adaptive_weight(double t, const TransportConfig& cfg) {
  if (!cfg.window.contains(t)) return 0.0;
  if (cfg.beta0 == 0.0) return 0.0;
  const double s = cfg.orientation == ScheduleOrientation::kElapsed ? 1.0 - t : t;
  return cfg.beta0 * cosine_schedule(s, cfg.phi);
}

LatentState clip_norm(const LatentState& v, double tau) {
  if (!(tau > 0.0)) throw ConfigError("clip_norm: tau must be > 0");
  const double n = v.norm();
  // A rescaled vector can land a few ulps above tau; leave it alone so clipping is idempotent.
  if (n <= tau * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) return v;
  return v * (tau / n);
}

std::pair<LatentState, GuidanceSample> enhance_velocity(const LatentState& v_base,
                                                        const LatentState& z,
                                                        const LatentState& z_target, double t,
                                                        const TransportConfig& cfg) {
  require_same_dimension(v_base, z, "enhance_velocity");
  GuidanceSample sample;
  const LatentState d = transport_direction(z, z_target, t, cfg.delta);
  sample.raw_norm = d.norm();
  sample.direction = clip_norm(d, cfg.clip_tau);
  sample.weight = adaptive_weight(t, cfg);
  sample.active = sample.weight != 0.0;
  if (!sample.active) {
    sample.weight = 0.0;
    return {v_base, std::move(sample)};
  }
  if (sample.raw_norm == 0.0) return {v_base, std::move(sample)};
  return {v_base + sample.weight * sample.direction, std::move(sample)};
}

}  // namespace otrf
