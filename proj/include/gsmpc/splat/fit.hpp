#pragma once

#include <functional>
#include <vector>

#include "gsmpc/splat/losses.hpp"
#include "gsmpc/splat/types.hpp"

namespace gsmpc::splat {

struct FitConfig {
    double lr = 0.001;
    int epochs = 2000;
    double beta = 0.25;            // SSIM weight in the reconstruction loss
    SsimConfig ssim;
    double scale_min = 1e-5;
    double scale_max = 1.0;
    // Adam moments
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct FitResult {
    SplatScene scene;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_curve;  // one entry per epoch
};

/// recon_loss summed over views for the given scene.
double scene_loss(const SplatScene& scene, const std::vector<std::pair<Image, CameraView>>& views,
                  const Vec3& background, double beta, const SsimConfig& ssim_cfg = {});

/// Optimize all splat parameters against the views with Adam. Quaternions are
/// renormalized and opacity/color/scale clamped after every step. Returns the
/// best-loss parameters seen, so final_loss <= initial_loss.
FitResult fit_scene(const std::vector<std::pair<Image, CameraView>>& views,
                    const SplatScene& init, const FitConfig& config,
                    const Vec3& background = Vec3::Zero());

} // namespace gsmpc::splat
