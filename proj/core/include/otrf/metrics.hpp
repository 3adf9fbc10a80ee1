#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "otrf/latent.hpp"

namespace otrf {

inline constexpr std::size_t kMaxAssignmentSize = 2048;

double l2_distance(const LatentState& a, const LatentState& b);

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-tolerance, 0) are clamped to zero; more negative ones throw ConfigError.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tolerance = 1e-10);

// Closed-form W2 between N(mean1, cov1) and N(mean2, cov2) (Bures metric).
double w2_gaussian(const LatentState& mean1, const Eigen::MatrixXd& cov1,
                   const LatentState& mean2, const Eigen::MatrixXd& cov2);

struct AssignmentPlan {
  std::vector<std::size_t> permutation;  // source index -> target index
  double cost = 0.0;                     // sum of assigned costs
};

// Exact minimum-cost perfect matching on a square cost matrix
// (shortest augmenting path Hungarian method, O(n^3)).
AssignmentPlan solve_assignment(const Eigen::MatrixXd& cost);

// W2 between the uniform measures on two equal-size clouds, by exact
// assignment under squared Euclidean cost: sqrt(cost / n).
std::pair<double, AssignmentPlan> w2_empirical_exact(const PointSet& a, const PointSet& b);

// Sample mean and covariance (1/n normalisation).
std::pair<LatentState, Eigen::MatrixXd> sample_moments(const PointSet& points);

using OdeRhs = std::function<LatentState(const LatentState&, double)>;

// Oracle only: classical RK4 on n_fine uniform steps from t_start to t_end.
// Throws NumericalAbort on non-finite stages.
LatentState reference_integrate(const OdeRhs& rhs, const LatentState& z_init, double t_start,
                                double t_end, int n_fine);

// Forward Euler with the same conventions, for comparison with the oracle.
LatentState euler_integrate(const OdeRhs& rhs, const LatentState& z_init, double t_start,
                            double t_end, int n_steps);

// Least-squares slope of log(y) against log(x); points with y <= 0 skipped.
// Returns NaN with fewer than two usable points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace otrf
