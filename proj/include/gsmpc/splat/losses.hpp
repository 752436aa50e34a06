#pragma once

#include <vector>

#include "gsmpc/splat/types.hpp"

namespace gsmpc::splat {

struct SsimConfig {
    int window = 8;
    int stride = 4;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// Mean SSIM over sliding windows, per channel, uniform window statistics.
/// Result in [-1, 1]; 1 for identical images.
double ssim(const Image& a, const Image& b, const SsimConfig& cfg = {});

/// d(ssim)/d(a) per pixel, holding b fixed.
std::vector<Vec3> ssim_backward(const Image& a, const Image& b, const SsimConfig& cfg = {});

/// Mean absolute error plus beta * (1 - SSIM).
double recon_loss(const Image& recon, const Image& gt, double beta = 0.25,
                  const SsimConfig& ssim_cfg = {});

/// d(recon_loss)/d(recon) per pixel.
std::vector<Vec3> recon_loss_backward(const Image& recon, const Image& gt, double beta = 0.25,
                                      const SsimConfig& ssim_cfg = {});

} // namespace gsmpc::splat
