#pragma once

#include "gsmpc/dyn/model.hpp"

namespace gsmpc::dyn {

/// Translate positions and left-multiply rotations by the per-splat deltas;
/// color, opacity and scale pass through unchanged.
SplatScene apply(const SplatScene& scene, const Deltas& deltas);

/// Gradients of apply w.r.t. its inputs, given gradients on the output scene.
struct ApplyGrads {
    std::vector<Vec3> d_delta_g;
    std::vector<Vec4> d_delta_r;
    splat::SceneGrad d_scene;  // includes the c/sigma/s passthrough terms
};

ApplyGrads apply_backward(const SplatScene& scene, const Deltas& deltas,
                          const splat::SceneGrad& d_next);

enum class ChamferMatch {
    FullMetric,    // nearest neighbor by position + rotation term
    PositionOnly,  // nearest neighbor by position, rotation term on the match
};

/// Symmetric Chamfer over splats with per-pair term
/// |g - g_hat| + lambda * (1 - |<r, r_hat>|), averaged per set and summed
/// over both directions.
double chamfer_loss(const SplatScene& pred, const SplatScene& gt, double lambda,
                    ChamferMatch match = ChamferMatch::FullMetric);

/// d(chamfer)/d(pred splat positions and rotations), assignments held fixed.
splat::SceneGrad chamfer_loss_backward(const SplatScene& pred, const SplatScene& gt,
                                       double lambda,
                                       ChamferMatch match = ChamferMatch::FullMetric);

/// Iterate build_graph -> forward -> apply, rebuilding edges each step.
/// Returns T+1 scenes including the input.
std::vector<SplatScene> rollout(const DynamicsModel& model, const SplatScene& scene,
                                const std::vector<sim::Action>& actions,
                                double omega = kDefaultOmega);

} // namespace gsmpc::dyn
