#include <doctest.h>

#include <cmath>

#include "otrf/bounds.hpp"
#include "otrf/errors.hpp"
#include "support.hpp"

using namespace otrf;
using otrf::testing::two_gaussian_registry;
using otrf::testing::vec;

namespace {

PointSet left_inputs(int n, std::uint64_t seed) {
  NormalStream s(RngSeed{seed});
  PointSet out;
  for (int i = 0; i < n; ++i) out.push_back(vec({-2.0, 0.0}) + 0.5 * s.next_vector(2));
  return out;
}

InversionBoundSetup standard_setup(const FieldRegistry& reg) {
  InversionBoundSetup s;
  s.registry = &reg;
  s.codec = LatentCodec::identity(2);
  s.config.eta = 0.6;
  s.config.transport.phi = 0.3;
  s.config.transport.clip_tau = 1.0;
  s.config.n_steps = 28;
  s.inputs = left_inputs(64, 21);
  s.targets = s.inputs;
  return s;
}

const Measurement* find(const BoundReport& r, const std::string& series, double control) {
  for (const auto& m : r.measured) {
    if (m.series == series && m.control == control) return &m;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("schedule integral") {
  for (auto o : {ScheduleOrientation::kElapsed, ScheduleOrientation::kRemaining}) {
    CHECK(std::abs(schedule_integral(1.0, o) - 0.375) <= 1e-8);
    CHECK(std::abs(schedule_integral(0.5, o) - 0.1875) <= 1e-8);
    for (double phi : {0.05, 0.1, 0.3, 0.7, 0.93}) {
      CAPTURE(phi);
      CHECK(std::abs(schedule_integral(phi, o) - 0.375 * phi) <= 1e-8);
    }
  }
  CHECK_THROWS_AS(schedule_integral(0.0, ScheduleOrientation::kElapsed), ConfigError);
}

TEST_CASE("transport guided rhs matches the enhanced editing velocity") {
  const FieldRegistry reg = two_gaussian_registry();
  const RegistryField field(reg, 1.0);
  TransportConfig tc;
  tc.beta0 = 0.4;
  tc.phi = 0.6;
  tc.clip_tau = 2.0;
  const LatentState target = vec({-2, 0.5});
  const OdeRhs rhs = transport_guided_rhs(field, ConditionSpec::null(), tc, target);
  for (double t : {0.95, 0.7, 0.5, 0.2}) {
    const LatentState z = vec({-1.0, 0.8 * t});
    const LatentState v = field.velocity(z, t, ConditionSpec::null());
    const LatentState u = enhance_velocity(-v, z, target, t, tc).first;
    CHECK((rhs(z, t) + u).norm() < 1e-14);
  }
}

TEST_CASE("discretization bound: zero field is degenerate") {
  const FunctionField zero([](const LatentState& z, double) { return LatentState::Zero(z.size()); });
  DiscretizationSetup s;
  s.field = &zero;
  s.z_init = vec({1, 2});
  s.z_target = s.z_init;
  const BoundReport r = verify_discretization_bound(s, {10, 20, 40});
  for (const auto& m : r.measured) CHECK(m.observed == 0.0);
  CHECK(r.degenerate);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(recompute_pass(r));
}

TEST_CASE("discretization bound on the guided reference field") {
  const FieldRegistry reg = two_gaussian_registry();
  const RegistryField field(reg, 1.0);
  DiscretizationSetup s;
  s.field = &field;
  s.condition = ConditionSpec::reference(vec({-2.0, 0.3}));
  s.transport.beta0 = 0.5;
  s.transport.phi = 1.0;
  s.z_init = vec({0.4, -0.9});
  s.z_target = vec({-1.5, 0.6});
  const std::vector<int> steps{10, 20, 40, 80, 160};
  const BoundReport r = verify_discretization_bound(s, steps);
  MESSAGE("local slope " << r.slope << ", global slope " << r.fitted_constants.at("global_slope"));
  CHECK_FALSE(r.degenerate);
  CHECK(r.slope >= 1.8);
  CHECK(r.slope <= 2.2);
  CHECK(r.fitted_constants.at("global_slope") >= 0.8);
  CHECK(r.fitted_constants.at("global_slope") <= 1.2);
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const double dt = 0.8 / steps[i], dt2 = 0.8 / steps[i + 1];
    const double ratio = find(r, "local", dt)->observed / find(r, "local", dt2)->observed;
    CAPTURE(ratio);
    CHECK(ratio >= 3.4);
    CHECK(ratio <= 4.6);
  }
  CHECK(r.pass);
  CHECK(recompute_pass(r));
  CHECK(r.tolerance_used == 0.2);
}

TEST_CASE("discretization bound input checks") {
  const FunctionField zero([](const LatentState& z, double) { return LatentState::Zero(z.size()); });
  DiscretizationSetup s;
  s.field = &zero;
  s.z_init = vec({1});
  s.z_target = vec({1});
  CHECK_THROWS_AS(verify_discretization_bound(s, {10}), ConfigError);
  CHECK_THROWS_AS(verify_discretization_bound(s, {20, 10}), ConfigError);
  s.t_local = 0.1;
  CHECK_THROWS_AS(verify_discretization_bound(s, {10, 20}), ConfigError);
  s.field = nullptr;
  CHECK_THROWS_AS(verify_discretization_bound(s, {10, 20}), ConfigError);
}

TEST_CASE("convergence bound on the standard setup") {
  const FieldRegistry reg = two_gaussian_registry();
  const InversionBoundSetup s = standard_setup(reg);
  const BoundReport r = verify_convergence_bound(s, {0.0, 0.1, 0.2, 0.4});
  const double eps = r.fitted_constants.at("eps_RF");
  const double base = find(r, "mean_sq_error", 0.0)->observed;
  MESSAGE("eps_RF " << eps << " measured " << base << " C " << r.fitted_constants.at("C_transport"));
  CHECK(base > 0.0);
  CHECK(r.fitted_constants.at("eps_RF_measured") == base);
  CHECK(std::abs(eps - base) <= 0.1 * base);
  CHECK(r.fitted_constants.at("C_transport") >= 0.0);
  CHECK(r.pass);
  CHECK(recompute_pass(r));

  InversionBoundSetup few = s;
  few.inputs.resize(10);
  few.targets.resize(10);
  CHECK_THROWS_AS(verify_convergence_bound(few, {0.0, 0.1}), ConfigError);
  CHECK_THROWS_AS(verify_convergence_bound(s, {0.1, 0.2}), ConfigError);
}

TEST_CASE("edit control bound on the standard setup") {
  const FieldRegistry reg = two_gaussian_registry();
  const InversionBoundSetup s = standard_setup(reg);
  const BoundReport r = verify_edit_control_bound(s, {0.0, 0.1, 0.2, 0.4, 0.8}, 0.3);
  MESSAGE("slope " << r.slope << " K " << r.fitted_constants.at("K"));
  CHECK(find(r, "sq_displacement", 0.0)->observed == 0.0);
  CHECK(r.slope >= 1.5);
  CHECK(r.slope <= 2.5);
  CHECK(r.fitted_constants.at("K") >= 0.0);
  CHECK(r.fitted_constants.at("eps_schedule") >= 0.0);
  CHECK(std::abs(r.fitted_constants.at("schedule_integral") - 0.375 * 0.3) <= 1e-8);
  const double k = r.fitted_constants.at("K"), e = r.fitted_constants.at("eps_schedule");
  for (const auto& m : r.measured) {
    if (m.series != "sq_displacement") continue;
    CHECK(m.observed <= k * m.control * m.control * 0.1125 + e + 1e-15);
  }
  CHECK(r.pass);
  CHECK(recompute_pass(r));
}

TEST_CASE("pass is recomputed from the measurements alone") {
  BoundReport r;
  r.kind = BoundKind::kEditControl;
  r.tolerance_used = 0.5;
  r.measured = {{"schedule_integral", 0.3, 0.1125},
                {"sq_displacement", 0.0, 0.0},
                {"sq_displacement", 0.1, 0.01},
                {"sq_displacement", 0.2, 0.04},
                {"sq_displacement", 0.4, 0.16}};
  CHECK(recompute_pass(r));
  r.measured[1].observed = 1e-6;
  CHECK_FALSE(recompute_pass(r));
  r.measured[1].observed = 0.0;
  r.measured[4].observed = 16.0;
  CHECK_FALSE(recompute_pass(r));

  BoundReport c;
  c.kind = BoundKind::kConvergence;
  c.tolerance_used = 0.1;
  c.measured = {{"mean_sq_error", 0.0, 1.0}, {"mean_sq_error", 0.2, 1.04}, {"mean_sq_error", 0.4, 1.16}};
  CHECK(recompute_pass(c));
  c.measured = {{"mean_sq_error", 0.0, 1.0}, {"mean_sq_error", 0.2, 0.96}, {"mean_sq_error", 0.4, 0.84}};
  CHECK_FALSE(recompute_pass(c));
  c.measured = {{"mean_sq_error", 0.0, 1.0}, {"mean_sq_error", 0.2, 1.0}};
  CHECK_FALSE(recompute_pass(c));
}
