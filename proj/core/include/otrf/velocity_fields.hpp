#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "otrf/condition.hpp"
#include "otrf/flow_core.hpp"
#include "otrf/latent.hpp"

namespace otrf {

inline constexpr double kDefaultTimeFloor = 1e-4;

struct GuidanceScales {
  double w = 1.0;
  double w_src = 1.0;
  double w_tar = 1.0;

  // Throws ConfigError on negative or non-finite entries.
  void validate() const;
};

// Symmetric PSD covariance with a cached eigendecomposition. Eigenvalues
// down to -1e-10 are clamped to zero; anything more negative is rejected.
class GaussianComponent {
 public:
  GaussianComponent(LatentState mean, Eigen::MatrixXd cov, double weight = 1.0);

  const LatentState& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  double weight() const { return weight_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  Eigen::Index dimension() const { return mean_.size(); }

  // mean + cov^{1/2} xi
  LatentState transform_standard(const LatentState& xi) const;

 private:
  LatentState mean_;
  Eigen::MatrixXd cov_;
  double weight_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
};

// Named data distributions standing in for prompt-conditioned model weights.
// Immutable once handed to a field; evaluation is thread-safe.
class FieldRegistry {
 public:
  explicit FieldRegistry(double t_floor = kDefaultTimeFloor);

  // Throws FieldError on empty sets, non-finite entries, duplicate names,
  // or a dimension that disagrees with previously registered data.
  void add_points(const std::string& name, PointSet points);
  void add_gaussian(const std::string& name, LatentState mean, Eigen::MatrixXd cov,
                    double weight = 1.0);

  bool contains(const std::string& name) const;
  bool empty() const { return points_.empty() && gaussians_.empty(); }
  std::vector<std::string> names() const;
  double t_floor() const { return t_floor_; }
  // 0 while empty.
  Eigen::Index dimension() const { return dimension_; }

  // nullptr if `name` is not a point set.
  const PointSet* points(const std::string& name) const;
  // nullptr if `name` is not a Gaussian.
  const GaussianComponent* gaussian(const std::string& name) const;

  const std::map<std::string, PointSet>& point_sets() const { return points_; }
  const std::map<std::string, GaussianComponent>& gaussians() const { return gaussians_; }

 private:
  void check_new(const std::string& name, Eigen::Index dim);

  double t_floor_;
  Eigen::Index dimension_ = 0;
  std::map<std::string, PointSet> points_;
  std::map<std::string, GaussianComponent> gaussians_;
};

// Softmax with max subtraction; weights below 1e-300 are flushed to zero and
// the rest renormalized.
std::vector<double> stable_softmax(std::span<const double> logits);

// Exact marginal velocity E[eps - x | z_t = z] for the uniform empirical
// measure on `points`. t is clamped to [t_floor, 1].
LatentState empirical_marginal_velocity(const PointSet& points, const LatentState& z,
                                        double t, double t_floor = kDefaultTimeFloor);

// Closed form for Gaussian data N(mean, cov):
//   (t I - (1-t) cov) C^{-1} (z - (1-t) mean) - mean,  C = (1-t)^2 cov + t^2 I.
LatentState gaussian_marginal_velocity(const LatentState& mean, const Eigen::MatrixXd& cov,
                                       const LatentState& z, double t,
                                       double t_floor = kDefaultTimeFloor);
LatentState gaussian_marginal_velocity(const GaussianComponent& g, const LatentState& z,
                                       double t, double t_floor = kDefaultTimeFloor);

// Marginal velocity of the pooled mixture: every point is an atom of weight 1
// and every Gaussian contributes its own weight.
LatentState mixture_marginal_velocity(std::span<const PointSet* const> point_sets,
                                      std::span<const GaussianComponent* const> gaussians,
                                      const LatentState& z, double t,
                                      double t_floor = kDefaultTimeFloor);

// (z - z_ref) / max(t, t_floor): the straight-line field through z_ref.
LatentState conditional_linear_velocity(const LatentState& z_ref, const LatentState& z,
                                        double t, double t_floor = kDefaultTimeFloor);

// v_uncond + w (v_cond - v_uncond)
LatentState cfg_blend(const LatentState& v_uncond, const LatentState& v_cond, double w);

// Dispatch on the condition kind:
//   null          -> marginal over the union of all registered data
//   dataset(name) -> field of that dataset, CFG-blended with null at weight w
//   reference(z)  -> conditional_linear_velocity toward z
LatentState evaluate(const FieldRegistry& registry, const LatentState& z, double t,
                     const ConditionSpec& condition, double w);
LatentState evaluate(const FieldRegistry& registry, const LatentState& z, double t,
                     const ConditionSpec& condition, const GuidanceScales& scales);

// VelocityField view of a registry at a fixed guidance weight.
class RegistryField final : public VelocityField {
 public:
  RegistryField(const FieldRegistry& registry, double w) : registry_(&registry), w_(w) {}

  LatentState velocity(const LatentState& z, double t,
                       const ConditionSpec& condition) const override;

  const FieldRegistry& registry() const { return *registry_; }
  double guidance() const { return w_; }

 private:
  const FieldRegistry* registry_;
  double w_;
};

}  // namespace otrf
