#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "otrf/errors.hpp"
#include "otrf/rng.hpp"
#include "otrf/velocity_fields.hpp"
#include "support.hpp"

using namespace otrf;
using otrf::testing::vec;

namespace {

PointSet ring(int n, double r) {
  PointSet pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    pts.push_back(vec({r * std::cos(a), r * std::sin(a)}));
  }
  return pts;
}

double rel_err(const LatentState& a, const LatentState& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

}  // namespace

TEST_CASE("single point field is the conditional straight line") {
  const LatentState x = vec({1.0, -2.0});
  const LatentState eps = vec({0.3, 0.8});
  for (double t : {0.1, 0.5, 0.9}) {
    const LatentState z = (1 - t) * x + t * eps;
    const LatentState v = empirical_marginal_velocity({x}, z, t);
    CHECK((v - (eps - x)).norm() < 1e-12);
    const LatentState w = empirical_marginal_velocity({x}, vec({0.4, 0.4}), t);
    CHECK((w - ((vec({0.4, 0.4}) - (1 - t) * x) / t - x)).norm() < 1e-12);
  }
}

TEST_CASE("symmetric pair gives zero velocity at the origin") {
  const LatentState x = vec({1.0, 0.5});
  for (double t : {0.2, 0.5, 0.8}) {
    const LatentState v = empirical_marginal_velocity({x, LatentState(-x)}, vec({0, 0}), t);
    CHECK(v.norm() < 1e-12);
  }
}

TEST_CASE("empirical field matches a Monte-Carlo posterior estimate") {
  // E[eps - x | z_t = z] by self-normalised importance sampling over 1e6
  // independent data draws, each weighted by the likelihood N(z; (1-t)x, t^2 I).
  const PointSet pts = ring(8, 1.0);
  const double t = 0.5;
  const LatentState z = vec({0.35, -0.2});
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick(0, 7);
  const int n = 1000000;
  double sw = 0.0, sw2 = 0.0;
  Eigen::Vector2d s1 = Eigen::Vector2d::Zero(), s2 = Eigen::Vector2d::Zero();
  std::vector<double> ws;
  std::vector<Eigen::Vector2d> fs;
  ws.reserve(n);
  fs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const LatentState& x = pts[static_cast<std::size_t>(pick(rng))];
    const double w = std::exp(-(z - (1 - t) * x).squaredNorm() / (2 * t * t));
    const Eigen::Vector2d f = (z - (1 - t) * x) / t - x;
    ws.push_back(w);
    fs.push_back(f);
    sw += w;
    sw2 += w * w;
    s1 += w * f;
  }
  const Eigen::Vector2d mean = s1 / sw;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d d = fs[static_cast<std::size_t>(i)] - mean;
    s2 += ws[static_cast<std::size_t>(i)] * ws[static_cast<std::size_t>(i)] * d.cwiseProduct(d);
  }
  const Eigen::Vector2d se = s2.cwiseSqrt() / sw;
  const LatentState v = empirical_marginal_velocity(pts, z, t);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(v[k] - mean[k]) <= 3.0 * se[k] + 1e-12);
}

TEST_CASE("softmax weights are a probability vector") {
  const std::vector<double> logits{-1e6, 0.0, -3.0, 2.0, -1e308};
  const auto w = stable_softmax(logits);
  double s = 0.0;
  for (double x : w) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    s += x;
  }
  CHECK(std::abs(s - 1.0) < 1e-12);
  // Far-away data at tiny t would underflow without the max shift.
  const LatentState v = empirical_marginal_velocity({vec({1000.0})}, vec({-1000.0}), 1e-4);
  CHECK(v.allFinite());
}

TEST_CASE("single point field is scale equivariant") {
  const LatentState x = vec({0.7, -1.3});
  const LatentState z = vec({0.2, 0.9});
  for (double c : {0.5, 2.0, 10.0}) {
    for (double t : {0.25, 0.75}) {
      const LatentState a = empirical_marginal_velocity({LatentState(c * x)}, c * z, t);
      const LatentState b = c * empirical_marginal_velocity({x}, z, t);
      CHECK((a - b).norm() < 1e-12 * std::max(1.0, b.norm()));
    }
  }
}

TEST_CASE("gaussian field closed-form cases") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const LatentState zero = LatentState::Zero(2);
  for (double t : {0.1, 0.3, 0.7}) {
    const LatentState z = vec({0.4, -1.2});
    const LatentState v = gaussian_marginal_velocity(zero, I, z, t);
    const LatentState want = (2 * t - 1) * z / ((1 - t) * (1 - t) + t * t);
    CHECK((v - want).norm() < 1e-12);
  }
  CHECK(gaussian_marginal_velocity(zero, I, vec({3, -4}), 0.5).norm() < 1e-12);

  const LatentState mu = vec({1.5, -0.5});
  Eigen::MatrixXd cov(2, 2);
  cov << 0.6, 0.1, 0.1, 0.2;
  for (double t : {0.05, 0.5, 0.95}) {
    const LatentState v = gaussian_marginal_velocity(mu, cov, (1 - t) * mu, t);
    CHECK((v + mu).norm() < 1e-12);
  }
}

TEST_CASE("gaussian field agrees with the empirical field on samples") {
  // Component N((-2, 0, ...), 0.25 I). The empirical field on 4096 draws is
  // averaged over 32 independent draws; the average must be within 2% of the
  // closed form and within 4 standard errors per coordinate.
  constexpr int kDraws = 4096;
  constexpr int kReps = 32;
  for (int d : {1, 2, 8}) {
    CAPTURE(d);
    LatentState mu = LatentState::Zero(d);
    mu[0] = -2.0;
    const GaussianComponent g(mu, 0.25 * Eigen::MatrixXd::Identity(d, d));
    NormalStream s(RngSeed{static_cast<std::uint64_t>(d)});
    std::vector<PointSet> reps(kReps);
    for (auto& samples : reps) {
      for (int i = 0; i < kDraws; ++i) samples.push_back(g.transform_standard(s.next_vector(d)));
    }
    for (double t : {0.25, 0.5, 0.75}) {
      CAPTURE(t);
      const LatentState z = (1 - t) * mu + t * LatentState::Constant(d, 0.5);
      const LatentState vg = gaussian_marginal_velocity(g, z, t);
      LatentState sum = LatentState::Zero(d), sum_sq = LatentState::Zero(d);
      int single_within = 0;
      for (const auto& samples : reps) {
        const LatentState ve = empirical_marginal_velocity(samples, z, t);
        sum += ve;
        sum_sq += ve.cwiseProduct(ve);
        if (rel_err(ve, vg) < 0.02) ++single_within;
      }
      const LatentState mean = sum / kReps;
      const LatentState var =
          ((sum_sq - kReps * mean.cwiseProduct(mean)) / (kReps - 1)).cwiseMax(0.0);
      const LatentState sem = (var / kReps).cwiseSqrt();
      MESSAGE("single draws within 2%: " << single_within << "/" << kReps);
      CHECK(rel_err(mean, vg) < 0.02);
      for (Eigen::Index k = 0; k < d; ++k) CHECK(std::abs(mean[k] - vg[k]) <= 4.0 * sem[k] + 1e-12);
    }
  }
}

TEST_CASE("conditional linear field") {
  const LatentState r = vec({1, 2});
  CHECK(conditional_linear_velocity(r, r, 0.3).norm() == 0.0);
  CHECK(conditional_linear_velocity(vec({0, 0}), vec({1, 0}), 0.5) == vec({2, 0}));
  CHECK(conditional_linear_velocity(vec({0}), vec({1}), 0.0, 1e-4) == vec({1e4}));
  CHECK_THROWS_AS(conditional_linear_velocity(vec({0}), vec({1, 2}), 0.5), DimensionError);
}

TEST_CASE("cfg blend") {
  const LatentState u = vec({0.3, -0.2}), c = vec({1.1, 0.4});
  CHECK(cfg_blend(u, c, 0.0) == u);
  CHECK((cfg_blend(u, c, 1.0) - c).norm() < 1e-15);
  CHECK(cfg_blend(vec({0, 0}), vec({1, 0}), 7.5) == vec({7.5, 0}));
}

TEST_CASE("evaluate dispatch") {
  FieldRegistry reg;
  const PointSet a = ring(4, 1.0);
  reg.add_points("a", a);
  const LatentState z = vec({0.3, 0.1});
  CHECK(evaluate(reg, z, 0.4, ConditionSpec::dataset("a"), 1.0) ==
        empirical_marginal_velocity(a, z, 0.4));
  const LatentState r = vec({-1, 1});
  CHECK(evaluate(reg, z, 0.4, ConditionSpec::reference(r), 3.0) ==
        conditional_linear_velocity(r, z, 0.4));
  CHECK_THROWS_AS(evaluate(reg, z, 0.4, ConditionSpec::dataset("missing"), 1.0), FieldError);

  FieldRegistry empty;
  CHECK_THROWS_AS(evaluate(empty, z, 0.4, ConditionSpec::null(), 1.0), FieldError);
}

TEST_CASE("null condition pools all point sets uniformly") {
  FieldRegistry reg;
  const PointSet a = ring(3, 1.0);
  const PointSet b{vec({2, 2}), vec({-3, 0.5}), vec({0, -2}), vec({1, 1}), vec({0.5, 0})};
  reg.add_points("a", a);
  reg.add_points("b", b);
  PointSet pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double t : {0.2, 0.5, 0.8}) {
    const LatentState z = vec({0.1 + t, -0.4});
    const LatentState v = evaluate(reg, z, t, ConditionSpec::null(), 1.0);
    CHECK((v - empirical_marginal_velocity(pooled, z, t)).norm() < 1e-12);
  }
  // Guidance blends the dataset field with the pooled field.
  const LatentState z = vec({0.5, 0.5});
  const LatentState blended = evaluate(reg, z, 0.5, ConditionSpec::dataset("a"), 2.5);
  const LatentState u = empirical_marginal_velocity(pooled, z, 0.5);
  const LatentState c = empirical_marginal_velocity(a, z, 0.5);
  CHECK((blended - (u + 2.5 * (c - u))).norm() < 1e-12);
}

TEST_CASE("registry validation") {
  FieldRegistry reg;
  CHECK_THROWS_AS(reg.add_points("e", {}), FieldError);
  CHECK_THROWS_AS(reg.add_points("nan", {vec({std::nan("")})}), FieldError);
  reg.add_points("a", {vec({1, 2})});
  CHECK_THROWS_AS(reg.add_points("a", {vec({1, 2})}), FieldError);
  CHECK_THROWS_AS(reg.add_points("b", {vec({1, 2, 3})}), FieldError);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(reg.add_gaussian("g", vec({0, 0}), bad), FieldError);
  Eigen::MatrixXd nearly(2, 2);
  nearly << 1, 0, 0, -1e-12;
  CHECK_NOTHROW(reg.add_gaussian("g2", vec({0, 0}), nearly));
  GuidanceScales s;
  s.w_tar = -1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}
