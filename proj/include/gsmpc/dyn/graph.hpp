#pragma once

#include <utility>
#include <vector>

#include "gsmpc/splat/types.hpp"

namespace gsmpc::dyn {

using splat::SplatScene;

constexpr int kNodeFeatureDim = 14;  // c(3) sigma(1) r(4) g(3) s(3)
constexpr int kActionDim = 4;
constexpr double kDefaultOmega = 0.1;

/// Graph over splats: one node per splat, undirected edges between splats
/// whose centers are within omega of each other.
struct SceneGraph {
    Eigen::MatrixXd features;                   // n x 14, row per node
    std::vector<std::pair<int, int>> edges;     // i < j, no self edges
    std::vector<std::vector<int>> neighbors;    // symmetric adjacency, sorted
    std::vector<int> splat_index;               // node -> splat (identity here)

    int node_count() const { return static_cast<int>(features.rows()); }
};

SceneGraph build_graph(const SplatScene& scene, double omega = kDefaultOmega);

/// Node feature row (c, sigma, r, g, s) with the rotation normalized on read.
Eigen::Matrix<double, 1, kNodeFeatureDim> node_features(const splat::Splat& splat);

/// Scatter a feature-row gradient back onto splat parameter gradients.
void node_features_backward(const splat::Splat& splat,
                            const Eigen::Ref<const Eigen::RowVectorXd>& d_features,
                            splat::SplatGrad& grad);

} // namespace gsmpc::dyn
