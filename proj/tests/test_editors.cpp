#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "otrf/editors.hpp"
#include "otrf/errors.hpp"
#include "otrf/presets.hpp"
#include "support.hpp"

using namespace otrf;
using otrf::testing::bit_equal;
using otrf::testing::two_gaussian_registry;
using otrf::testing::vec;

namespace {

PointSet left_inputs(int n, std::uint64_t seed) {
  NormalStream s(RngSeed{seed});
  PointSet out;
  for (int i = 0; i < n; ++i) out.push_back(vec({-2.0, 0.0}) + 0.5 * s.next_vector(2));
  return out;
}

InversionEditConfig inversion_config(double eta, double beta0) {
  InversionEditConfig cfg;
  cfg.eta = eta;
  cfg.transport.beta0 = beta0;
  cfg.transport.phi = 0.3;
  cfg.transport.clip_tau = 1.0;
  cfg.n_steps = 28;
  return cfg;
}

FlowEditConfig flowedit_config(double beta) {
  FlowEditConfig cfg;
  cfg.transport.beta0 = beta;
  cfg.transport.phi = 0.3;
  cfg.transport.clip_tau = 1.0;
  cfg.n_steps = 28;
  cfg.n_max = 24;
  cfg.n_min = 0;
  cfg.cond_src = ConditionSpec::dataset("left");
  cfg.cond_tar = ConditionSpec::dataset("right");
  cfg.seed = RngSeed{99};
  return cfg;
}

// Textbook FlowEdit written out directly: no transport code, data-ward
// update z <- z - dt (v_tar - v_src).
LatentState textbook_flowedit(const FlowEditConfig& cfg, const FieldRegistry& reg,
                              const LatentState& x0) {
  const TimeGrid grid = make_time_grid(cfg.n_steps, 1.0, 0.0);
  const double dt = grid.step();
  NormalStream noise(cfg.seed);
  const LatentState z_src = x0;
  LatentState z = z_src;
  for (int k = 0; k < cfg.n_steps; ++k) {
    const int i = cfg.n_steps - k;
    const double t = grid.point(k);
    if (i > cfg.n_max) continue;
    LatentState delta;
    for (int j = 0; j < cfg.n_avg; ++j) {
      const LatentState eps = noise.next_vector(z.size());
      const LatentState zs = forward_noising(z_src, t, eps);
      const LatentState zt = zs + (z - z_src);
      const LatentState d = evaluate(reg, zs, t, cfg.cond_src, cfg.scales.w_src) -
                            evaluate(reg, zt, t, cfg.cond_tar, cfg.scales.w_tar);
      if (j == 0) {
        delta = d;
      } else {
        delta += d;
      }
    }
    if (cfg.n_avg > 1) delta /= static_cast<double>(cfg.n_avg);
    z = z + dt * delta;
  }
  return z;
}

}  // namespace

TEST_CASE("controller guided velocity") {
  const LatentState a = vec({1, 0}), b = vec({0, 1});
  CHECK(bit_equal(controller_guided_velocity(a, b, 0.0), a));
  CHECK((controller_guided_velocity(a, b, 1.0) - b).norm() == 0.0);
  CHECK((controller_guided_velocity(a, b, 0.6) - vec({0.4, 0.6})).norm() < 1e-15);
  CHECK_THROWS_AS(controller_guided_velocity(a, vec({1}), 0.5), DimensionError);
}

TEST_CASE("inversion edit with zero knobs is plain inversion then denoising") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  for (const auto& cond : {ConditionSpec::null(), ConditionSpec::dataset("right")}) {
    InversionEditConfig cfg = inversion_config(0.0, 0.0);
    cfg.condition_target = cond;
    cfg.scales.w = 2.5;
    for (const auto& x0 : left_inputs(8, 3)) {
      const RegistryField field(reg, cfg.scales.w);
      const LatentState zT = rf_invert(field, x0, make_time_grid(28, 0.0, 1.0), ConditionSpec::null())
                                 .final_state();
      const Trajectory want = rf_denoise(field, zT, make_time_grid(28, 1.0, 0.0), cond);
      const EditResult got = transport_guided_inversion_edit(cfg, reg, codec, x0);
      REQUIRE(got.trajectory.size() == want.size());
      for (std::size_t k = 0; k < want.size(); ++k) {
        CHECK(bit_equal(got.trajectory.records[k].z, want.records[k].z));
      }
      CHECK(bit_equal(got.output, want.final_state()));
      CHECK(got.summary.transport_work == 0.0);
    }
  }
}

TEST_CASE("inversion edit with full controller follows the conditional linear field") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  const InversionEditConfig cfg = inversion_config(1.0, 0.0);
  for (const auto& x0 : left_inputs(8, 4)) {
    const RegistryField field(reg, 1.0);
    LatentState z =
        rf_invert(field, x0, make_time_grid(28, 0.0, 1.0), ConditionSpec::null()).final_state();
    const TimeGrid grid = make_time_grid(28, 1.0, 0.0);
    for (int k = 0; k < 28; ++k) {
      const double t = grid.point(k);
      z = z - grid.step() * ((z - x0) / t);
    }
    const EditResult got = transport_guided_inversion_edit(cfg, reg, codec, x0);
    CHECK((got.output - z).norm() < 1e-12);
    CHECK(got.summary.reconstruction_l2 == doctest::Approx((z - x0).norm()).epsilon(1e-9));
    CHECK(got.summary.reconstruction_l2 < 1e-12);
  }
}

TEST_CASE("inversion edit summary and records") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec(vec({2.0, 0.5}), vec({1.0, -1.0}));
  InversionEditConfig cfg = inversion_config(0.6, 0.4);
  cfg.condition_target = ConditionSpec::dataset("right");
  const LatentState x0 = vec({-1.7, 0.3}), xt = vec({-2.2, 0.1});
  const EditResult r = transport_guided_inversion_edit(cfg, reg, codec, x0, xt);
  REQUIRE(r.trajectory.size() == 29);
  CHECK(bit_equal(codec.decode(r.trajectory.final_state()), r.output));
  CHECK(r.summary.reconstruction_l2 == doctest::Approx((r.output - xt).norm()));
  CHECK(r.summary.displacement_l2 == doctest::Approx((r.output - x0).norm()));
  double work = 0.0;
  const double dt = 1.0 / 28;
  for (std::size_t k = 0; k + 1 < r.trajectory.size(); ++k) {
    const auto& rec = r.trajectory.records[k];
    CHECK((rec.z + dt * rec.v_applied - r.trajectory.records[k + 1].z).norm() < 1e-12);
    work += rec.weight * std::min(rec.transport_norm, cfg.transport.clip_tau) * dt;
  }
  CHECK(work > 0.0);
  CHECK(r.summary.transport_work == doctest::Approx(work).epsilon(1e-12));
}

TEST_CASE("reconstruction preset reconstructs exactly at every transport strength") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  const PointSet inputs = left_inputs(64, 5);
  const InversionPreset p = *find_inversion_preset("reconstruction");
  InversionEditConfig base = inversion_config(p.eta, p.beta0);
  base.transport.phi = p.phi;
  base.transport.clip_tau = p.clip_tau;
  base.transport.delta = p.delta;
  base.n_steps = p.n_steps;
  base.eta_window = {1.0 - p.start, 1.0 - p.stop};
  auto mean_recon = [&](double beta0) {
    InversionEditConfig cfg = base;
    cfg.transport.beta0 = beta0;
    double s = 0.0;
    for (const auto& x0 : inputs) {
      s += transport_guided_inversion_edit(cfg, reg, codec, x0).summary.reconstruction_l2;
    }
    return s / static_cast<double>(inputs.size());
  };
  for (double b : {0.0, 0.05, 0.1, 0.2}) {
    CAPTURE(b);
    CHECK(mean_recon(b) <= 1e-12);
  }
}

TEST_CASE("inversion edit config validation") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  InversionEditConfig cfg = inversion_config(1.5, 0.0);
  CHECK_THROWS_AS(transport_guided_inversion_edit(cfg, reg, codec, vec({0, 0})), ConfigError);
  cfg = inversion_config(0.5, 0.0);
  cfg.n_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = inversion_config(0.5, 0.0);
  cfg.condition_target = ConditionSpec::dataset("missing");
  CHECK_THROWS_AS(transport_guided_inversion_edit(cfg, reg, codec, vec({0, 0})), FieldError);
  CHECK_THROWS_AS(transport_guided_inversion_edit(inversion_config(0.5, 0.0), reg, codec,
                                                  vec({0, 0, 0})),
                  DimensionError);
}

TEST_CASE("flowedit with equal conditions and no transport returns the input") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  FlowEditConfig cfg = flowedit_config(0.0);
  cfg.cond_tar = cfg.cond_src;
  for (const auto& x0 : left_inputs(8, 6)) {
    const EditResult r = transport_enhanced_flowedit(cfg, reg, codec, x0);
    CHECK(bit_equal(r.output, x0));
    CHECK(r.summary.displacement_l2 == 0.0);
  }
}

TEST_CASE("flowedit without transport matches textbook flowedit") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  for (int n_avg : {1, 3}) {
    CAPTURE(n_avg);
    FlowEditConfig cfg = flowedit_config(0.0);
    cfg.n_avg = n_avg;
    cfg.scales.w_src = 1.5;
    cfg.scales.w_tar = 5.5;
    for (const auto& x0 : left_inputs(8, 7)) {
      const LatentState want = textbook_flowedit(cfg, reg, x0);
      CHECK(bit_equal(transport_enhanced_flowedit(cfg, reg, codec, x0).output, want));
      CHECK(bit_equal(baseline_flowedit(cfg, reg, codec, x0), want));
    }
  }
}

TEST_CASE("flowedit coupling identity and step phases") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  FlowEditConfig cfg = flowedit_config(0.7);
  cfg.n_max = 20;
  const LatentState x0 = vec({-2.1, 0.4});
  const EditResult r = transport_enhanced_flowedit(cfg, reg, codec, x0);
  REQUIRE(r.trajectory.size() == 29);
  for (std::size_t k = 0; k < 28; ++k) {
    const auto& rec = r.trajectory.records[k];
    CHECK(rec.coupling_gap <= 1e-12);
    if (28 - static_cast<int>(k) > cfg.n_max) {
      CHECK(bit_equal(rec.z, x0));
      CHECK(rec.v_applied.norm() == 0.0);
    }
  }
  CHECK(r.summary.transport_work > 0.0);
  CHECK(r.output[0] > x0[0]);

  FlowEditConfig off = cfg;
  off.n_max = 0;
  CHECK(bit_equal(transport_enhanced_flowedit(off, reg, codec, x0).output, x0));
}

TEST_CASE("flowedit with every step in the trailing phase is noising then denoising") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  FlowEditConfig cfg = flowedit_config(0.5);
  cfg.n_max = cfg.n_min = 28;
  cfg.scales.w_tar = 2.0;
  const LatentState x0 = vec({-1.8, -0.2});
  NormalStream noise(cfg.seed);
  const LatentState zT = forward_noising(x0, 1.0, noise.next_vector(2));
  const Trajectory want =
      rf_denoise(RegistryField(reg, 2.0), zT, make_time_grid(28, 1.0, 0.0), cfg.cond_tar);
  const EditResult got = transport_enhanced_flowedit(cfg, reg, codec, x0);
  CHECK(bit_equal(got.output, want.final_state()));
  CHECK(got.summary.transport_work == 0.0);
}

TEST_CASE("editors are deterministic") {
  const FieldRegistry reg = two_gaussian_registry();
  const LatentCodec codec = LatentCodec::identity(2);
  const LatentState x0 = vec({-2.3, 0.2});
  FlowEditConfig fe = flowedit_config(0.3);
  fe.n_avg = 2;
  fe.n_min = 4;
  const EditResult a = transport_enhanced_flowedit(fe, reg, codec, x0);
  const EditResult b = transport_enhanced_flowedit(fe, reg, codec, x0);
  InversionEditConfig inv = inversion_config(0.6, 0.3);
  const EditResult c = transport_guided_inversion_edit(inv, reg, codec, x0);
  const EditResult d = transport_guided_inversion_edit(inv, reg, codec, x0);
  for (const auto& [p, q] : {std::pair{&a, &b}, std::pair{&c, &d}}) {
    REQUIRE(p->trajectory.size() == q->trajectory.size());
    for (std::size_t k = 0; k < p->trajectory.size(); ++k) {
      CHECK(bit_equal(p->trajectory.records[k].z, q->trajectory.records[k].z));
      CHECK(bit_equal(p->trajectory.records[k].v_applied, q->trajectory.records[k].v_applied));
    }
  }
  fe.seed = RngSeed{100};
  CHECK_FALSE(bit_equal(transport_enhanced_flowedit(fe, reg, codec, x0).output, a.output));
}

TEST_CASE("flowedit config validation") {
  FlowEditConfig cfg = flowedit_config(0.0);
  cfg.n_min = 25;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = flowedit_config(0.0);
  cfg.n_max = 29;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = flowedit_config(0.0);
  cfg.n_avg = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(FlowEditConfig{}.transport.orientation == ScheduleOrientation::kRemaining);
}
