#include "otrf/editors.hpp"

#include <cmath>
#include <string>

#include "otrf/errors.hpp"

namespace otrf {

void InversionEditConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("inversion: eta must lie in [0, 1]");
  if (n_steps < 1) throw ConfigError("inversion: n_steps must be >= 1");
  eta_window.validate("inversion eta");
  transport.validate();
  scales.validate();
}

void FlowEditConfig::validate() const {
  if (n_steps < 1) throw ConfigError("flowedit: n_steps must be >= 1");
  if (n_avg < 1) throw ConfigError("flowedit: n_avg must be >= 1");
  if (!(0 <= n_min && n_min <= n_max && n_max <= n_steps)) {
    throw ConfigError("flowedit: need 0 <= n_min <= n_max <= n_steps");
  }
  transport.validate();
  scales.validate();
}

LatentState controller_guided_velocity(const LatentState& v_tar, const LatentState& v_ref,
                                       double eta) {
  require_same_dimension(v_tar, v_ref, "controller_guided_velocity");
  if (eta == 0.0) return v_tar;
  return v_tar + eta * (v_ref - v_tar);
}

namespace {

void check_finite(const LatentState& v, const char* what, double t, int step) {
  if (!all_finite(v)) {
    throw NumericalAbort(std::string(what) + " became non-finite", t, step);
  }
}

EditSummary summarize(const LatentState& output, const LatentState& x0,
                      const LatentState& x_target, double transport_work) {
  return {(output - x_target).norm(), (output - x0).norm(), transport_work};
}

}  // namespace

EditResult transport_guided_inversion_edit(const InversionEditConfig& cfg,
                                           const FieldRegistry& registry,
                                           const LatentCodec& codec, const LatentState& x0,
                                           const LatentState& x_target) {
  cfg.validate();
  require_same_dimension(x0, x_target, "inversion edit");
  const LatentState z0 = codec.encode(x0);
  const LatentState z_target = codec.encode(x_target);

  const RegistryField field(registry, cfg.scales.w);
  const Trajectory inverted =
      rf_invert(field, z0, make_time_grid(cfg.n_steps, 0.0, 1.0), cfg.condition_inversion);

  const TimeGrid grid = make_time_grid(cfg.n_steps, 1.0, 0.0);
  const double dt = grid.step();
  EditResult result;
  result.trajectory.records.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  LatentState z = inverted.final_state();
  double work = 0.0;

  for (int k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.point(k);
    const LatentState v_tar = evaluate(registry, z, t, cfg.condition_target, cfg.scales.w);
    check_finite(v_tar, "target velocity", t, k);

    const double eta = cfg.eta_window.contains(t) ? cfg.eta : 0.0;
    LatentState v_rf = v_tar;
    if (eta != 0.0) {
      const LatentState v_ref = conditional_linear_velocity(z0, z, t, registry.t_floor());
      v_rf = controller_guided_velocity(v_tar, v_ref, eta);
    }

    // Data-ward frame: the Euler update below is z <- z + dt * u.
    auto [u_enh, sample] = enhance_velocity(-v_rf, z, z_target, t, cfg.transport);
    check_finite(u_enh, "enhanced velocity", t, k);
    LatentState next = z + dt * u_enh;
    check_finite(next, "state", t, k);

    work += sample.weight * sample.direction.norm() * dt;
    result.trajectory.records.push_back(
        {t, std::move(z), std::move(u_enh), sample.raw_norm, sample.weight, 0.0});
    z = std::move(next);
  }
  result.trajectory.records.push_back(
      {grid.t_end(), z, LatentState::Zero(z.size()), 0.0, 0.0, 0.0});

  result.output = codec.decode(z);
  result.summary = summarize(result.output, x0, x_target, work);
  return result;
}

EditResult transport_guided_inversion_edit(const InversionEditConfig& cfg,
                                           const FieldRegistry& registry,
                                           const LatentCodec& codec, const LatentState& x0) {
  return transport_guided_inversion_edit(cfg, registry, codec, x0, x0);
}

namespace {

// Shared step bookkeeping for FlowEdit; `editing_step` is invoked for the
// difference-velocity phase and returns the averaged data-ward velocity.
template <typename EditingStep>
EditResult run_flowedit(const FlowEditConfig& cfg, const FieldRegistry& registry,
                        const LatentCodec& codec, const LatentState& x0,
                        EditingStep&& editing_step) {
  cfg.validate();
  const LatentState z_src = codec.encode(x0);
  const TimeGrid grid = make_time_grid(cfg.n_steps, 1.0, 0.0);
  const double dt = grid.step();
  NormalStream noise(cfg.seed);

  EditResult result;
  result.trajectory.records.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  LatentState z = z_src;
  bool coupled_denoising = false;
  double work = 0.0;
  const LatentState zero = LatentState::Zero(z.size());

  for (int k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.point(k);
    const int step_index = cfg.n_steps - k;
    if (step_index > cfg.n_max) {
      result.trajectory.records.push_back({t, z, zero, 0.0, 0.0, 0.0});
      continue;
    }

    TrajectoryRecord rec;
    rec.t = t;
    LatentState u;
    if (step_index <= cfg.n_min) {
      if (!coupled_denoising) {
        // Enter the SDEdit phase: swap to the noised, coupled target state.
        const LatentState eps = noise.next_vector(z.size());
        const LatentState z_t_src = forward_noising(z_src, t, eps);
        z = z_t_src + (z - z_src);
        coupled_denoising = true;
      }
      u = -evaluate(registry, z, t, cfg.cond_tar, cfg.scales.w_tar);
    } else {
      double step_work = 0.0;
      u = editing_step(z, z_src, t, noise, rec, step_work);
      work += step_work * dt;
    }
    check_finite(u, "flowedit velocity", t, k);
    LatentState next = z + dt * u;
    check_finite(next, "flowedit state", t, k);
    rec.z = std::move(z);
    rec.v_applied = std::move(u);
    result.trajectory.records.push_back(std::move(rec));
    z = std::move(next);
  }
  result.trajectory.records.push_back({grid.t_end(), z, zero, 0.0, 0.0, 0.0});

  result.output = codec.decode(z);
  result.summary = summarize(result.output, x0, x0, work);
  return result;
}

}  // namespace

EditResult transport_enhanced_flowedit(const FlowEditConfig& cfg, const FieldRegistry& registry,
                                       const LatentCodec& codec, const LatentState& x0) {
  auto step = [&](const LatentState& z, const LatentState& z_src, double t, NormalStream& noise,
                  TrajectoryRecord& rec, double& step_work) {
    LatentState acc;
    double gap = 0.0;
    double norm_sum = 0.0;
    double weight = 0.0;
    for (int j = 0; j < cfg.n_avg; ++j) {
      const LatentState eps = noise.next_vector(z.size());
      const LatentState z_t_src = forward_noising(z_src, t, eps);
      const LatentState z_t_tar = z_t_src + (z - z_src);
      gap = std::max(gap, ((z_t_tar - z_t_src) - (z - z_src)).cwiseAbs().maxCoeff());

      const LatentState v_src = evaluate(registry, z_t_src, t, cfg.cond_src, cfg.scales.w_src);
      const LatentState v_tar = evaluate(registry, z_t_tar, t, cfg.cond_tar, cfg.scales.w_tar);
      // Data-ward difference velocity (-v_tar) - (-v_src).
      const LatentState u_fe = v_src - v_tar;
      auto [u_enh, sample] = enhance_velocity(u_fe, z_t_src, z_t_tar, t, cfg.transport);
      step_work += sample.weight * sample.direction.norm() / cfg.n_avg;
      norm_sum += sample.raw_norm;
      weight = sample.weight;
      if (j == 0) {
        acc = std::move(u_enh);
      } else {
        acc += u_enh;
      }
    }
    rec.coupling_gap = gap;
    rec.transport_norm = norm_sum / cfg.n_avg;
    rec.weight = weight;
    if (cfg.n_avg == 1) return acc;
    return LatentState(acc / static_cast<double>(cfg.n_avg));
  };
  return run_flowedit(cfg, registry, codec, x0, step);
}

LatentState baseline_flowedit(const FlowEditConfig& cfg, const FieldRegistry& registry,
                              const LatentCodec& codec, const LatentState& x0) {
  auto step = [&](const LatentState& z, const LatentState& z_src, double t, NormalStream& noise,
                  TrajectoryRecord&, double&) {
    LatentState acc;
    for (int j = 0; j < cfg.n_avg; ++j) {
      const LatentState eps = noise.next_vector(z.size());
      const LatentState z_t_src = forward_noising(z_src, t, eps);
      const LatentState z_t_tar = z_t_src + (z - z_src);
      const LatentState v_src = evaluate(registry, z_t_src, t, cfg.cond_src, cfg.scales.w_src);
      const LatentState v_tar = evaluate(registry, z_t_tar, t, cfg.cond_tar, cfg.scales.w_tar);
      LatentState u_fe = v_src - v_tar;
      if (j == 0) {
        acc = std::move(u_fe);
      } else {
        acc += u_fe;
      }
    }
    if (cfg.n_avg == 1) return acc;
    return LatentState(acc / static_cast<double>(cfg.n_avg));
  };
  return run_flowedit(cfg, registry, codec, x0, step).output;
}

}  // namespace otrf
