#include "otrf/flow_core.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "otrf/errors.hpp"

namespace otrf {

ConfigError::ConfigError(const std::string& what, int line, int column)
    : Error(what), line_(line), column_(column) {}

NumericalAbort::NumericalAbort(const std::string& what, double t, std::ptrdiff_t step)
    : Error(what), time_(t), step_(step) {}

bool all_finite(const LatentState& z) { return z.allFinite(); }

void require_same_dimension(const LatentState& a, const LatentState& b, std::string_view what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a.size() << " vs " << b.size() << ")";
    throw DimensionError(os.str());
  }
}

ConditionSpec ConditionSpec::dataset(std::string name) {
  ConditionSpec c;
  c.kind_ = Dataset{std::move(name)};
  return c;
}

ConditionSpec ConditionSpec::reference(LatentState state) {
  ConditionSpec c;
  c.kind_ = Reference{std::move(state)};
  return c;
}

std::string ConditionSpec::label() const {
  if (is_null()) return "null";
  if (is_dataset()) return dataset_name();
  return "reference";
}

bool operator==(const ConditionSpec& a, const ConditionSpec& b) {
  if (a.kind_.index() != b.kind_.index()) return false;
  if (a.is_dataset()) return a.dataset_name() == b.dataset_name();
  if (a.is_reference()) return a.reference_state() == b.reference_state();
  return true;
}

double TimeGrid::signed_step() const {
  return direction_ == GridDirection::kForward ? step_ : -step_;
}

TimeGrid TimeGrid::reversed() const { return make_time_grid(n_steps_, t_end_, t_start_); }

TimeGrid make_time_grid(int n_steps, double t_start, double t_end) {
  if (n_steps < 1) throw ConfigError("time grid: n_steps must be >= 1");
  if (!(t_start >= 0.0 && t_start <= 1.0) || !(t_end >= 0.0 && t_end <= 1.0)) {
    throw ConfigError("time grid: endpoints must lie in [0, 1]");
  }
  if (t_start == t_end) throw ConfigError("time grid: endpoints must differ");

  TimeGrid g;
  g.n_steps_ = n_steps;
  g.t_start_ = t_start;
  g.t_end_ = t_end;
  g.step_ = std::abs(t_start - t_end) / n_steps;
  g.direction_ = t_end > t_start ? GridDirection::kForward : GridDirection::kReverse;
  g.points_.resize(static_cast<std::size_t>(n_steps) + 1);
  const double span = t_end - t_start;
  for (int k = 0; k < n_steps; ++k) {
    g.points_[static_cast<std::size_t>(k)] =
        t_start + span * (static_cast<double>(k) / static_cast<double>(n_steps));
  }
  g.points_.back() = t_end;
  return g;
}

LatentState euler_step(const LatentState& z, const LatentState& v, double signed_step) {
  require_same_dimension(z, v, "euler_step");
  LatentState out = z + signed_step * v;
  if (!all_finite(out)) throw NumericalAbort("euler_step: non-finite state", 0.0, -1);
  return out;
}

LatentState forward_noising(const LatentState& z0, double t, const LatentState& eps) {
  require_same_dimension(z0, eps, "forward_noising");
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("forward_noising: t must lie in [0, 1]");
  return (1.0 - t) * z0 + t * eps;
}

LatentCodec::LatentCodec(LatentState scale, LatentState offset)
    : scale_(std::move(scale)), offset_(std::move(offset)) {
  if (scale_.size() == 0) throw ConfigError("codec: empty scale vector");
  if (offset_.size() != scale_.size()) throw ConfigError("codec: scale/offset size mismatch");
  for (Eigen::Index i = 0; i < scale_.size(); ++i) {
    if (scale_[i] == 0.0 || !std::isfinite(scale_[i])) {
      throw ConfigError("codec: scale entries must be finite and nonzero");
    }
  }
  if (!all_finite(offset_)) throw ConfigError("codec: offset entries must be finite");
}

LatentCodec LatentCodec::identity(Eigen::Index dimension) {
  return LatentCodec(LatentState::Ones(dimension), LatentState::Zero(dimension));
}

LatentState LatentCodec::encode(const LatentState& x) const {
  require_same_dimension(x, scale_, "encode");
  if (is_identity()) return x;
  return (x - offset_).cwiseQuotient(scale_);
}

LatentState LatentCodec::decode(const LatentState& z) const {
  require_same_dimension(z, scale_, "decode");
  if (is_identity()) return z;
  return z.cwiseProduct(scale_) + offset_;
}

bool LatentCodec::is_identity() const {
  return (scale_.array() == 1.0).all() && (offset_.array() == 0.0).all();
}

LatentState FunctionField::velocity(const LatentState& z, double t,
                                    const ConditionSpec& /*condition*/) const {
  return fn_(z, t);
}

namespace {

Trajectory integrate(const VelocityField& field, const LatentState& z_init, const TimeGrid& grid,
                     const ConditionSpec& condition, double sign, const char* who) {
  if (!all_finite(z_init)) throw NumericalAbort(std::string(who) + ": non-finite initial state",
                                                grid.t_start(), 0);
  Trajectory traj;
  traj.records.reserve(static_cast<std::size_t>(grid.n_steps()) + 1);
  LatentState z = z_init;
  const double dt = grid.step();
  for (int k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.point(k);
    LatentState v = field.velocity(z, t, condition);
    require_same_dimension(z, v, who);
    if (!all_finite(v)) throw NumericalAbort(std::string(who) + ": non-finite velocity", t, k);
    LatentState next = z + (sign * dt) * v;
    if (!all_finite(next)) throw NumericalAbort(std::string(who) + ": non-finite state", t, k);
    // Recorded as the per-unit-step displacement rate: z_next = z + dt * v_applied.
    traj.records.push_back({t, std::move(z), sign * v, 0.0, 0.0, 0.0});
    z = std::move(next);
  }
  traj.records.push_back({grid.t_end(), z, LatentState::Zero(z.size()), 0.0, 0.0, 0.0});
  return traj;
}

}  // namespace

Trajectory rf_invert(const VelocityField& field, const LatentState& z0, const TimeGrid& grid,
                     const ConditionSpec& condition) {
  if (grid.direction() != GridDirection::kForward) {
    throw ConfigError("rf_invert: grid must run forward (toward noise)");
  }
  return integrate(field, z0, grid, condition, 1.0, "rf_invert");
}

Trajectory rf_denoise(const VelocityField& field, const LatentState& z_init, const TimeGrid& grid,
                      const ConditionSpec& condition) {
  if (grid.direction() != GridDirection::kReverse) {
    throw ConfigError("rf_denoise: grid must run in reverse (toward data)");
  }
  return integrate(field, z_init, grid, condition, -1.0, "rf_denoise");
}

}  // namespace otrf
