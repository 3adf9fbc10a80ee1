#include "otrf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "otrf/errors.hpp"

namespace otrf {

double l2_distance(const LatentState& a, const LatentState& b) {
  require_same_dimension(a, b, "l2_distance");
  return (a - b).norm();
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tolerance) {
  if (m.rows() != m.cols()) throw DimensionError("psd_sqrt: matrix must be square");
  if (!m.allFinite()) throw ConfigError("psd_sqrt: non-finite matrix");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw ConfigError("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tolerance * scale) {
      throw ConfigError("psd_sqrt: matrix is not positive semidefinite (eigenvalue " +
                        std::to_string(ev[i]) + ")");
    }
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double w2_gaussian(const LatentState& mean1, const Eigen::MatrixXd& cov1,
                   const LatentState& mean2, const Eigen::MatrixXd& cov2) {
  require_same_dimension(mean1, mean2, "w2_gaussian");
  const Eigen::Index d = mean1.size();
  if (cov1.rows() != d || cov1.cols() != d || cov2.rows() != d || cov2.cols() != d) {
    throw DimensionError("w2_gaussian: covariance shape does not match mean");
  }
  const Eigen::MatrixXd r2 = psd_sqrt(cov2);
  psd_sqrt(cov1);  // validates cov1
  const Eigen::MatrixXd cross = psd_sqrt(r2 * cov1 * r2);
  const double bures = (cov1 + cov2 - 2.0 * cross).trace();
  const double sq = (mean1 - mean2).squaredNorm() + std::max(bures, 0.0);
  return std::sqrt(sq);
}

std::pair<double, AssignmentPlan> w2_empirical_exact(const PointSet& a, const PointSet& b) {
  if (a.size() != b.size()) {
    throw DimensionError("w2_empirical_exact: clouds differ in size (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() > kMaxAssignmentSize) {
    throw DimensionError("w2_empirical_exact: size exceeds cap " +
                         std::to_string(kMaxAssignmentSize));
  }
  if (a.empty()) return {0.0, AssignmentPlan{}};
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& x = a[static_cast<std::size_t>(i)];
      const auto& y = b[static_cast<std::size_t>(j)];
      require_same_dimension(x, y, "w2_empirical_exact");
      cost(i, j) = (x - y).squaredNorm();
    }
  }
  AssignmentPlan plan = solve_assignment(cost);
  const double w2 = std::sqrt(std::max(plan.cost, 0.0) / static_cast<double>(n));
  return {w2, std::move(plan)};
}

std::pair<LatentState, Eigen::MatrixXd> sample_moments(const PointSet& points) {
  if (points.empty()) throw ConfigError("sample_moments: empty point set");
  const Eigen::Index d = points.front().size();
  LatentState mean = LatentState::Zero(d);
  for (const auto& p : points) {
    require_same_dimension(p, mean, "sample_moments");
    mean += p;
  }
  mean /= static_cast<double>(points.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : points) {
    const LatentState c = p - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(points.size());
  return {std::move(mean), std::move(cov)};
}

namespace {

void check_stage(const LatentState& v, double t, int k) {
  if (!all_finite(v)) throw NumericalAbort("integrator: non-finite stage", t, k);
}

void check_steps(int n, const char* who) {
  if (n < 1) throw ConfigError(std::string(who) + ": step count must be >= 1");
}

}  // namespace

LatentState reference_integrate(const OdeRhs& rhs, const LatentState& z_init, double t_start,
                                double t_end, int n_fine) {
  check_steps(n_fine, "reference_integrate");
  const double h = (t_end - t_start) / n_fine;
  LatentState z = z_init;
  for (int k = 0; k < n_fine; ++k) {
    const double t = t_start + h * k;
    const LatentState k1 = rhs(z, t);
    check_stage(k1, t, k);
    const LatentState k2 = rhs(z + 0.5 * h * k1, t + 0.5 * h);
    check_stage(k2, t, k);
    const LatentState k3 = rhs(z + 0.5 * h * k2, t + 0.5 * h);
    check_stage(k3, t, k);
    const LatentState k4 = rhs(z + h * k3, t + h);
    check_stage(k4, t, k);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_stage(z, t, k);
  }
  return z;
}

LatentState euler_integrate(const OdeRhs& rhs, const LatentState& z_init, double t_start,
                            double t_end, int n_steps) {
  check_steps(n_steps, "euler_integrate");
  const double h = (t_end - t_start) / n_steps;
  LatentState z = z_init;
  for (int k = 0; k < n_steps; ++k) {
    const double t = t_start + h * k;
    const LatentState v = rhs(z, t);
    check_stage(v, t, k);
    z += h * v;
    check_stage(z, t, k);
  }
  return z;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mm = static_cast<double>(m);
  const double denom = mm * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (mm * sxy - sx * sy) / denom;
}

}  // namespace otrf
