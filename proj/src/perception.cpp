#include "gsmpc/perception.hpp"

namespace gsmpc {

Box3 default_filter_box(const Box3& workspace, double particle_radius) {
    Box3 box = workspace;
    box.min.z() = 0.5 * particle_radius;
    box.max.z() = std::max(box.max.z(), 10.0 * particle_radius);
    return box;
}

PerceptionResult perceive(const std::vector<scene_init::RGBDObservation>& observations,
                          const PerceptionConfig& config, int n_particles,
                          double particle_radius, std::uint64_t seed) {
    scene_init::PointCloud cloud = scene_init::lift(observations);
    if (config.crop_to_workspace)
        cloud = scene_init::crop(cloud, config.filter_box);

    int k = config.splat_count;
    if (k <= 0)
        k = std::max(1, static_cast<int>(std::lround(config.splat_factor * n_particles)));
    cloud = scene_init::farthest_point_sample(cloud, static_cast<std::size_t>(k), seed);

    const double init_scale =
        config.init_scale > 0.0 ? config.init_scale : 0.5 * particle_radius;
    const splat::SplatScene init =
        scene_init::init_splats(cloud, init_scale, config.init_sigma);

    std::vector<std::pair<splat::Image, splat::CameraView>> views;
    views.reserve(observations.size());
    for (const auto& obs : observations)
        views.emplace_back(obs.image, obs.view);

    splat::FitResult fitted = splat::fit_scene(views, init, config.fit, config.background);

    PerceptionResult result;
    result.scene = scene_init::filter_scene(fitted.scene, config.filter_box, config.sigma_min);
    if (result.scene.empty())
        result.scene = fitted.scene;  // degenerate fit; keep the unfiltered scene
    result.initial_loss = fitted.initial_loss;
    result.final_loss = fitted.final_loss;
    return result;
}

} // namespace gsmpc
