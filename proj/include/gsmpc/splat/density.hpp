#pragma once

#include "gsmpc/splat/types.hpp"

namespace gsmpc::splat {

/// d(x) = sum_i sigma_i * exp(-1/2 (x - g_i)^T Sigma_i^{-1} (x - g_i)),
/// with Sigma_i the splat's world-frame covariance.
double density(const SplatScene& scene, const Vec3& x);

/// Per-splat world-frame covariance inverses, reusable across query points.
struct DensityCache {
    const SplatScene* scene = nullptr;
    std::vector<Mat3> cov_inv;
    std::vector<Mat3> rot;
    std::vector<Vec4> quat_n;
};

DensityCache build_density_cache(const SplatScene& scene);

double density_from_cache(const DensityCache& cache, const Vec3& x);

/// Accumulate d(d_out * density(x)) into per-splat gradients.
void density_backward(const DensityCache& cache, const Vec3& x, double d_out, SceneGrad& grad);

} // namespace gsmpc::splat
