#pragma once

#include <cstdint>

#include "gsmpc/scene_init/scene_init.hpp"
#include "gsmpc/splat/fit.hpp"

namespace gsmpc {

/// Observation-to-scene settings: lift, optional workspace crop, farthest
/// point sampling, splat initialization, reconstruction fit, and background /
/// transparency filtering.
struct PerceptionConfig {
    int splat_count = 0;          // 0: derive as splat_factor * n_particles
    double splat_factor = 2.0;
    double init_scale = 0.0;      // 0: half the particle radius
    double init_sigma = 0.9;
    double sigma_min = 0.05;
    bool crop_to_workspace = true;
    Box3 filter_box;              // workspace box used for crop and filtering
    Vec3 background = Vec3::Zero();
    splat::FitConfig fit;
};

/// Filter box for a tabletop workspace: same x/y extent, z from half the
/// particle height up, so table-plane points fall outside.
Box3 default_filter_box(const Box3& workspace, double particle_radius);

struct PerceptionResult {
    splat::SplatScene scene;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

PerceptionResult perceive(const std::vector<scene_init::RGBDObservation>& observations,
                          const PerceptionConfig& config, int n_particles,
                          double particle_radius, std::uint64_t seed);

} // namespace gsmpc
