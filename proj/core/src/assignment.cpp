#include <limits>
#include <string>
#include <vector>

#include "otrf/errors.hpp"
#include "otrf/metrics.hpp"

namespace otrf {

// Shortest augmenting path with row/column potentials. Rows are added one at
// a time; each addition runs a Dijkstra-like sweep over columns.
AssignmentPlan solve_assignment(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.rows() != cost.cols()) throw DimensionError("solve_assignment: cost must be square");
  if (n > kMaxAssignmentSize) {
    throw DimensionError("solve_assignment: size " + std::to_string(n) + " exceeds cap " +
                         std::to_string(kMaxAssignmentSize));
  }
  if (!cost.allFinite()) throw FieldError("solve_assignment: non-finite cost entry");

  AssignmentPlan plan;
  if (n == 0) return plan;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based indexing; column 0 is a virtual start column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  plan.permutation.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) plan.permutation[match[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) {
    plan.cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(plan.permutation[i]));
  }
  return plan;
}

}  // namespace otrf
