#include "gsmpc/dyn/graph.hpp"

namespace gsmpc::dyn {

Eigen::Matrix<double, 1, kNodeFeatureDim> node_features(const splat::Splat& splat) {
    Eigen::Matrix<double, 1, kNodeFeatureDim> row;
    const Vec4 qn = quat::normalized(splat.rotation);
    row << splat.color.transpose(), splat.opacity, qn.transpose(), splat.position.transpose(),
        splat.scale.transpose();
    return row;
}

void node_features_backward(const splat::Splat& splat,
                            const Eigen::Ref<const Eigen::RowVectorXd>& d_features,
                            splat::SplatGrad& grad) {
    grad.d_color += d_features.segment<3>(0).transpose();
    grad.d_opacity += d_features[3];
    grad.d_rotation += quat::normalize_backward(splat.rotation, d_features.segment<4>(4).transpose());
    grad.d_position += d_features.segment<3>(8).transpose();
    grad.d_scale += d_features.segment<3>(11).transpose();
}

SceneGraph build_graph(const SplatScene& scene, double omega) {
    if (scene.empty())
        throw EmptyScene("build_graph on an empty scene");

    SceneGraph graph;
    const int n = static_cast<int>(scene.size());
    graph.features.resize(n, kNodeFeatureDim);
    graph.neighbors.resize(n);
    graph.splat_index.resize(n);

    for (int i = 0; i < n; ++i) {
        graph.features.row(i) = node_features(scene.splats[i]);
        graph.splat_index[i] = i;
    }
    const double omega_sq = omega * omega;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d2 = (scene.splats[i].position - scene.splats[j].position).squaredNorm();
            if (d2 <= omega_sq) {
                graph.edges.emplace_back(i, j);
                graph.neighbors[i].push_back(j);
                graph.neighbors[j].push_back(i);
            }
        }
    }
    return graph;
}

} // namespace gsmpc::dyn
