#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "otrf/condition.hpp"
#include "otrf/latent.hpp"

namespace otrf {

enum class GridDirection { kForward, kReverse };

// Uniform grid on normalized time; t = 0 is data, t = 1 is pure noise.
class TimeGrid {
 public:
  int n_steps() const { return n_steps_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  GridDirection direction() const { return direction_; }

  // |t_start - t_end| / n_steps, always positive.
  double step() const { return step_; }
  // +step for forward grids, -step for reverse grids.
  double signed_step() const;

  // k in [0, n_steps]; point(n_steps) == t_end exactly.
  double point(int k) const { return points_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& points() const { return points_; }

  // Same step count, endpoints swapped.
  TimeGrid reversed() const;

 private:
  friend TimeGrid make_time_grid(int n_steps, double t_start, double t_end);
  TimeGrid() = default;

  int n_steps_ = 0;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  double step_ = 0.0;
  GridDirection direction_ = GridDirection::kForward;
  std::vector<double> points_;
};

// Throws ConfigError on zero steps, equal endpoints, or times outside [0,1].
TimeGrid make_time_grid(int n_steps, double t_start, double t_end);

// z + signed_step * v. Throws NumericalAbort if the result is not finite.
LatentState euler_step(const LatentState& z, const LatentState& v, double signed_step);

// (1 - t) z0 + t eps.
LatentState forward_noising(const LatentState& z0, double t, const LatentState& eps);

struct TrajectoryRecord {
  double t = 0.0;
  LatentState z;
  // Displacement rate over [t, next t]: z_next = z + step * v_applied.
  // Zero on the final record.
  LatentState v_applied;
  double transport_norm = 0.0;
  double weight = 0.0;
  // FlowEdit only: max |(z_t_tar - z_t_src) - (z - z_src)|.
  double coupling_gap = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;

  const LatentState& final_state() const { return records.back().z; }
  std::size_t size() const { return records.size(); }
};

// Invertible affine map standing in for an encoder/decoder pair.
class LatentCodec {
 public:
  // Throws ConfigError if any scale entry is zero or non-finite.
  LatentCodec(LatentState scale, LatentState offset);

  static LatentCodec identity(Eigen::Index dimension);

  // (x - offset) / scale
  LatentState encode(const LatentState& x) const;
  // z * scale + offset
  LatentState decode(const LatentState& z) const;

  Eigen::Index dimension() const { return scale_.size(); }
  const LatentState& scale() const { return scale_; }
  const LatentState& offset() const { return offset_; }
  bool is_identity() const;

 private:
  LatentState scale_;
  LatentState offset_;
};

// Forward-process velocity dz/dt (t increasing toward noise).
// Implementations must be immutable and safe to call concurrently.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual LatentState velocity(const LatentState& z, double t,
                               const ConditionSpec& condition) const = 0;
};

// Adapts a plain function (condition ignored). Handy for tests and oracles.
class FunctionField final : public VelocityField {
 public:
  using Fn = std::function<LatentState(const LatentState&, double)>;
  explicit FunctionField(Fn fn) : fn_(std::move(fn)) {}

  LatentState velocity(const LatentState& z, double t,
                       const ConditionSpec& condition) const override;

 private:
  Fn fn_;
};

// Euler-integrates dz/dt = field(z, t, condition) along a forward grid.
// The final record holds the inverted noise code.
Trajectory rf_invert(const VelocityField& field, const LatentState& z0,
                     const TimeGrid& grid, const ConditionSpec& condition);

// Plain rectified-flow sampling along a reverse grid: z <- z - dt * v.
Trajectory rf_denoise(const VelocityField& field, const LatentState& z_init,
                      const TimeGrid& grid, const ConditionSpec& condition);

}  // namespace otrf
