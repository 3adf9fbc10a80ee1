#include <benchmark/benchmark.h>

#include "otrf/editors.hpp"
#include "otrf/metrics.hpp"
#include "otrf/rng.hpp"
#include "otrf/velocity_fields.hpp"

using namespace otrf;

namespace {

PointSet normal_cloud(int n, Eigen::Index d, std::uint64_t seed) {
  NormalStream s(RngSeed{seed});
  PointSet out;
  for (int i = 0; i < n; ++i) out.push_back(s.next_vector(d));
  return out;
}

FieldRegistry two_gaussians() {
  FieldRegistry reg;
  LatentState left(2), right(2);
  left << -2.0, 0.0;
  right << 2.0, 0.0;
  reg.add_gaussian("left", left, 0.25 * Eigen::MatrixXd::Identity(2, 2));
  reg.add_gaussian("right", right, 0.25 * Eigen::MatrixXd::Identity(2, 2));
  return reg;
}

void BM_EmpiricalVelocity(benchmark::State& state) {
  const PointSet pts = normal_cloud(static_cast<int>(state.range(0)), 2, 1);
  const LatentState z = LatentState::Constant(2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_marginal_velocity(pts, z, 0.5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EmpiricalVelocity)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_GaussianVelocity(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const LatentState mean = LatentState::Constant(d, -1.0);
  const Eigen::MatrixXd cov = 0.5 * Eigen::MatrixXd::Identity(d, d);
  const LatentState z = LatentState::Constant(d, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_marginal_velocity(mean, cov, z, 0.5));
}
BENCHMARK(BM_GaussianVelocity)->Arg(2)->Arg(8)->Arg(32);

void BM_Assignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointSet a = normal_cloud(n, 2, 2), b = normal_cloud(n, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(w2_empirical_exact(a, b));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Assignment)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNCubed);

void BM_InversionEdit(benchmark::State& state) {
  const FieldRegistry reg = two_gaussians();
  const LatentCodec codec = LatentCodec::identity(2);
  InversionEditConfig cfg;
  cfg.eta = 0.6;
  cfg.transport.beta0 = 0.1;
  cfg.transport.phi = 0.3;
  cfg.condition_target = ConditionSpec::dataset("right");
  cfg.n_steps = static_cast<int>(state.range(0));
  LatentState x0(2);
  x0 << -2.1, 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(transport_guided_inversion_edit(cfg, reg, codec, x0));
}
BENCHMARK(BM_InversionEdit)->Arg(28)->Arg(100);

void BM_FlowEdit(benchmark::State& state) {
  const FieldRegistry reg = two_gaussians();
  const LatentCodec codec = LatentCodec::identity(2);
  FlowEditConfig cfg;
  cfg.cond_src = ConditionSpec::dataset("left");
  cfg.cond_tar = ConditionSpec::dataset("right");
  cfg.n_avg = static_cast<int>(state.range(0));
  cfg.transport.beta0 = 0.3;
  LatentState x0(2);
  x0 << -2.1, 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(transport_enhanced_flowedit(cfg, reg, codec, x0));
}
BENCHMARK(BM_FlowEdit)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
