#include "otrf/velocity_fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "otrf/errors.hpp"

namespace otrf {

namespace {

constexpr double kEigenClampTolerance = 1e-10;
constexpr double kWeightFlush = 1e-300;

double clamp_time(double t, double t_floor) {
  if (std::isnan(t)) throw NumericalAbort("velocity field: NaN time", t, -1);
  return std::clamp(t, t_floor, 1.0);
}

}  // namespace

void GuidanceScales::validate() const {
  for (double s : {w, w_src, w_tar}) {
    if (!std::isfinite(s) || s < 0.0) {
      throw ConfigError("guidance scales must be finite and nonnegative");
    }
  }
}

GaussianComponent::GaussianComponent(LatentState mean, Eigen::MatrixXd cov, double weight)
    : mean_(std::move(mean)), cov_(std::move(cov)), weight_(weight) {
  const Eigen::Index d = mean_.size();
  if (d == 0) throw FieldError("gaussian: empty mean");
  if (cov_.rows() != d || cov_.cols() != d) throw FieldError("gaussian: covariance shape mismatch");
  if (!all_finite(mean_) || !cov_.allFinite()) throw FieldError("gaussian: non-finite parameters");
  if (!(weight_ > 0.0) || !std::isfinite(weight_)) throw FieldError("gaussian: weight must be > 0");
  const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, cov_.cwiseAbs().maxCoeff())) {
    throw FieldError("gaussian: covariance is not symmetric");
  }
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  if (eig.info() != Eigen::Success) throw FieldError("gaussian: eigendecomposition failed");
  eigenvalues_ = eig.eigenvalues();
  eigenvectors_ = eig.eigenvectors();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (eigenvalues_[i] < -kEigenClampTolerance) {
      throw FieldError("gaussian: covariance is not positive semidefinite");
    }
    eigenvalues_[i] = std::max(eigenvalues_[i], 0.0);
  }
}

LatentState GaussianComponent::transform_standard(const LatentState& xi) const {
  require_same_dimension(xi, mean_, "gaussian sample");
  return mean_ + eigenvectors_ * (eigenvalues_.cwiseSqrt().cwiseProduct(xi));
}

FieldRegistry::FieldRegistry(double t_floor) : t_floor_(t_floor) {
  if (!(t_floor > 0.0 && t_floor < 1.0)) throw ConfigError("registry: t_floor must lie in (0, 1)");
}

void FieldRegistry::check_new(const std::string& name, Eigen::Index dim) {
  if (name.empty() || name == "null") throw FieldError("registry: invalid dataset name '" + name + "'");
  if (contains(name)) throw FieldError("registry: duplicate dataset '" + name + "'");
  if (dimension_ != 0 && dim != dimension_) {
    std::ostringstream os;
    os << "registry: dataset '" << name << "' has dimension " << dim << ", expected "
       << dimension_;
    throw FieldError(os.str());
  }
}

void FieldRegistry::add_points(const std::string& name, PointSet points) {
  if (points.empty()) throw FieldError("registry: dataset '" + name + "' is empty");
  const Eigen::Index d = points.front().size();
  if (d == 0) throw FieldError("registry: dataset '" + name + "' has zero dimension");
  for (const auto& p : points) {
    if (p.size() != d) throw FieldError("registry: ragged dataset '" + name + "'");
    if (!all_finite(p)) throw FieldError("registry: non-finite point in '" + name + "'");
  }
  check_new(name, d);
  dimension_ = d;
  points_.emplace(name, std::move(points));
}

void FieldRegistry::add_gaussian(const std::string& name, LatentState mean, Eigen::MatrixXd cov,
                                 double weight) {
  GaussianComponent g(std::move(mean), std::move(cov), weight);
  check_new(name, g.dimension());
  dimension_ = g.dimension();
  gaussians_.emplace(name, std::move(g));
}

bool FieldRegistry::contains(const std::string& name) const {
  return points_.count(name) > 0 || gaussians_.count(name) > 0;
}

std::vector<std::string> FieldRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : points_) out.push_back(k);
  for (const auto& [k, _] : gaussians_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

const PointSet* FieldRegistry::points(const std::string& name) const {
  auto it = points_.find(name);
  return it == points_.end() ? nullptr : &it->second;
}

const GaussianComponent* FieldRegistry::gaussian(const std::string& name) const {
  auto it = gaussians_.find(name);
  return it == gaussians_.end() ? nullptr : &it->second;
}

std::vector<double> stable_softmax(std::span<const double> logits) {
  std::vector<double> w(logits.size(), 0.0);
  if (logits.empty()) return w;
  const double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw NumericalAbort("softmax: non-finite logits", 0.0, -1);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double e = std::exp(logits[i] - mx);
    w[i] = e < kWeightFlush ? 0.0 : e;
    total += w[i];
  }
  // total >= 1 because the maximum contributes exp(0).
  for (double& x : w) x /= total;
  return w;
}

LatentState empirical_marginal_velocity(const PointSet& points, const LatentState& z, double t,
                                        double t_floor) {
  if (points.empty()) throw FieldError("empirical field: empty point set");
  t = clamp_time(t, t_floor);
  const double keep = 1.0 - t;
  const double inv_two_t2 = 1.0 / (2.0 * t * t);
  std::vector<double> logits(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    require_same_dimension(points[i], z, "empirical field");
    logits[i] = -(z - keep * points[i]).squaredNorm() * inv_two_t2;
  }
  const std::vector<double> w = stable_softmax(logits);
  LatentState x_hat = LatentState::Zero(z.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (w[i] != 0.0) x_hat += w[i] * points[i];
  }
  return (z - keep * x_hat) / t - x_hat;
}

LatentState gaussian_marginal_velocity(const LatentState& mean, const Eigen::MatrixXd& cov,
                                       const LatentState& z, double t, double t_floor) {
  return gaussian_marginal_velocity(GaussianComponent(mean, cov), z, t, t_floor);
}

namespace {

// Log-density (up to a shared constant) of z under the noised component and
// its conditional velocity.
struct ComponentEval {
  double logit;
  LatentState velocity;
};

ComponentEval eval_gaussian(const GaussianComponent& g, const LatentState& z, double t) {
  const double keep = 1.0 - t;
  const Eigen::VectorXd c =
      (keep * keep) * g.eigenvalues().array() + t * t;  // eigenvalues of C
  const Eigen::VectorXd y = g.eigenvectors().transpose() * (z - keep * g.mean());
  const Eigen::VectorXd gain = (t - keep * g.eigenvalues().array()) / c.array();
  double logit = std::log(g.weight());
  logit -= 0.5 * (y.array().square() / c.array()).sum();
  logit -= 0.5 * c.array().log().sum();
  return {logit, g.eigenvectors() * gain.cwiseProduct(y) - g.mean()};
}

}  // namespace

LatentState gaussian_marginal_velocity(const GaussianComponent& g, const LatentState& z, double t,
                                       double t_floor) {
  require_same_dimension(g.mean(), z, "gaussian field");
  t = clamp_time(t, t_floor);
  return eval_gaussian(g, z, t).velocity;
}

LatentState mixture_marginal_velocity(std::span<const PointSet* const> point_sets,
                                      std::span<const GaussianComponent* const> gaussians,
                                      const LatentState& z, double t, double t_floor) {
  t = clamp_time(t, t_floor);
  const double keep = 1.0 - t;
  const double d = static_cast<double>(z.size());
  const double point_log_norm = -d * std::log(t);

  std::vector<double> logits;
  std::vector<const LatentState*> atoms;
  for (const PointSet* set : point_sets) {
    for (const LatentState& x : *set) {
      require_same_dimension(x, z, "mixture field");
      logits.push_back(-(z - keep * x).squaredNorm() / (2.0 * t * t) + point_log_norm);
      atoms.push_back(&x);
    }
  }
  std::vector<LatentState> gaussian_velocities;
  for (const GaussianComponent* g : gaussians) {
    require_same_dimension(g->mean(), z, "mixture field");
    ComponentEval e = eval_gaussian(*g, z, t);
    logits.push_back(e.logit);
    gaussian_velocities.push_back(std::move(e.velocity));
  }
  if (logits.empty()) throw FieldError("mixture field: no components");

  const std::vector<double> w = stable_softmax(logits);
  LatentState x_hat = LatentState::Zero(z.size());
  double point_mass = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (w[i] != 0.0) {
      x_hat += w[i] * *atoms[i];
      point_mass += w[i];
    }
  }
  LatentState v = LatentState::Zero(z.size());
  if (point_mass > 0.0) v = point_mass * (z - keep * (x_hat / point_mass)) / t - x_hat;
  for (std::size_t j = 0; j < gaussian_velocities.size(); ++j) {
    const double wj = w[atoms.size() + j];
    if (wj != 0.0) v += wj * gaussian_velocities[j];
  }
  return v;
}

LatentState conditional_linear_velocity(const LatentState& z_ref, const LatentState& z, double t,
                                        double t_floor) {
  require_same_dimension(z_ref, z, "conditional_linear_velocity");
  return (z - z_ref) / std::max(t, t_floor);
}

LatentState cfg_blend(const LatentState& v_uncond, const LatentState& v_cond, double w) {
  require_same_dimension(v_uncond, v_cond, "cfg_blend");
  return v_uncond + w * (v_cond - v_uncond);
}

namespace {

LatentState null_velocity(const FieldRegistry& registry, const LatentState& z, double t) {
  if (registry.empty()) throw FieldError("null condition: registry is empty");
  std::vector<const PointSet*> sets;
  std::vector<const GaussianComponent*> gaussians;
  for (const auto& [_, p] : registry.point_sets()) sets.push_back(&p);
  for (const auto& [_, g] : registry.gaussians()) gaussians.push_back(&g);
  // A single registered dataset is its own marginal; use the direct formula
  // so null and dataset evaluation agree bit-for-bit.
  if (sets.size() == 1 && gaussians.empty()) {
    return empirical_marginal_velocity(*sets.front(), z, t, registry.t_floor());
  }
  if (sets.empty() && gaussians.size() == 1) {
    return gaussian_marginal_velocity(*gaussians.front(), z, t, registry.t_floor());
  }
  return mixture_marginal_velocity(sets, gaussians, z, t, registry.t_floor());
}

LatentState dataset_velocity(const FieldRegistry& registry, const std::string& name,
                             const LatentState& z, double t) {
  if (const PointSet* p = registry.points(name)) {
    return empirical_marginal_velocity(*p, z, t, registry.t_floor());
  }
  if (const GaussianComponent* g = registry.gaussian(name)) {
    return gaussian_marginal_velocity(*g, z, t, registry.t_floor());
  }
  throw FieldError("unknown dataset '" + name + "'");
}

}  // namespace

LatentState evaluate(const FieldRegistry& registry, const LatentState& z, double t,
                     const ConditionSpec& condition, double w) {
  if (condition.is_reference()) {
    return conditional_linear_velocity(condition.reference_state(), z, t, registry.t_floor());
  }
  if (condition.is_null()) return null_velocity(registry, z, t);

  const std::string& name = condition.dataset_name();
  if (!registry.contains(name)) throw FieldError("unknown dataset '" + name + "'");
  if (w == 1.0) return dataset_velocity(registry, name, z, t);
  if (w == 0.0) return null_velocity(registry, z, t);
  return cfg_blend(null_velocity(registry, z, t), dataset_velocity(registry, name, z, t), w);
}

LatentState evaluate(const FieldRegistry& registry, const LatentState& z, double t,
                     const ConditionSpec& condition, const GuidanceScales& scales) {
  return evaluate(registry, z, t, condition, scales.w);
}

LatentState RegistryField::velocity(const LatentState& z, double t,
                                    const ConditionSpec& condition) const {
  return evaluate(*registry_, z, t, condition, w_);
}

}  // namespace otrf
