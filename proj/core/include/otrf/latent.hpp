#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace otrf {

// A point in latent space. Dimension is fixed per experiment; entries finite.
using LatentState = Eigen::VectorXd;
using PointSet = std::vector<LatentState>;

bool all_finite(const LatentState& z);

// Throws DimensionError naming `what` when sizes differ.
void require_same_dimension(const LatentState& a, const LatentState& b,
                            std::string_view what);

}  // namespace otrf
