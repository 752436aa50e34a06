#include "gsmpc/dyn/dynamics.hpp"

#include <limits>

namespace gsmpc::dyn {

SplatScene apply(const SplatScene& scene, const Deltas& deltas) {
    if (deltas.delta_g.size() != scene.size() || deltas.delta_r.size() != scene.size())
        throw LengthMismatch("deltas do not match scene size");
    SplatScene next = scene;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        next.splats[i].position += deltas.delta_g[i];
        next.splats[i].rotation =
            quat::normalized(quat::multiply(deltas.delta_r[i], scene.splats[i].rotation));
    }
    return next;
}

ApplyGrads apply_backward(const SplatScene& scene, const Deltas& deltas,
                          const splat::SceneGrad& d_next) {
    if (d_next.size() != scene.size())
        throw LengthMismatch("gradient does not match scene size");
    ApplyGrads grads;
    grads.d_delta_g.assign(scene.size(), Vec3::Zero());
    grads.d_delta_r.assign(scene.size(), Vec4::Zero());
    grads.d_scene.assign(scene.size(), splat::SplatGrad{});

    for (std::size_t i = 0; i < scene.size(); ++i) {
        // Passthrough channels.
        grads.d_scene[i].d_color = d_next[i].d_color;
        grads.d_scene[i].d_opacity = d_next[i].d_opacity;
        grads.d_scene[i].d_scale = d_next[i].d_scale;

        // Position: g_next = g + delta_g.
        grads.d_delta_g[i] = d_next[i].d_position;
        grads.d_scene[i].d_position = d_next[i].d_position;

        // Rotation: r_next = normalize(delta_r x r).
        const Vec4 product = quat::multiply(deltas.delta_r[i], scene.splats[i].rotation);
        const Vec4 d_product = quat::normalize_backward(product, d_next[i].d_rotation);
        grads.d_delta_r[i] =
            quat::right_product_matrix(scene.splats[i].rotation).transpose() * d_product;
        grads.d_scene[i].d_rotation =
            quat::left_product_matrix(deltas.delta_r[i]).transpose() * d_product;
    }
    return grads;
}

namespace {

double pair_term(const splat::Splat& a, const splat::Splat& b, double lambda) {
    const double pos = (a.position - b.position).norm();
    const double dot = std::abs(a.rotation.dot(b.rotation));
    return pos + lambda * (1.0 - dot);
}

double match_term(const splat::Splat& a, const splat::Splat& b, double lambda,
                  ChamferMatch match) {
    if (match == ChamferMatch::PositionOnly)
        return (a.position - b.position).norm();
    return pair_term(a, b, lambda);
}

std::size_t nearest(const splat::Splat& from, const SplatScene& to, double lambda,
                    ChamferMatch match) {
    std::size_t best = 0;
    double best_term = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < to.size(); ++j) {
        const double term = match_term(from, to.splats[j], lambda, match);
        if (term < best_term) {
            best_term = term;
            best = j;
        }
    }
    return best;
}

} // namespace

double chamfer_loss(const SplatScene& pred, const SplatScene& gt, double lambda,
                    ChamferMatch match) {
    if (pred.empty() || gt.empty())
        throw EmptySet("chamfer_loss needs non-empty scenes");
    double total = 0.0;
    for (const splat::Splat& p : pred.splats)
        total += pair_term(p, gt.splats[nearest(p, gt, lambda, match)], lambda) / pred.size();
    for (const splat::Splat& g : gt.splats)
        total += pair_term(g, pred.splats[nearest(g, pred, lambda, match)], lambda) / gt.size();
    return total;
}

splat::SceneGrad chamfer_loss_backward(const SplatScene& pred, const SplatScene& gt,
                                       double lambda, ChamferMatch match) {
    if (pred.empty() || gt.empty())
        throw EmptySet("chamfer_loss needs non-empty scenes");
    splat::SceneGrad grad(pred.size());

    const auto add_pair_grad = [&](std::size_t pred_idx, const splat::Splat& other,
                                   double weight) {
        const splat::Splat& p = pred.splats[pred_idx];
        const Vec3 diff = p.position - other.position;
        const double dist = diff.norm();
        if (dist > 1e-12)
            grad[pred_idx].d_position += weight * diff / dist;
        const double dot = p.rotation.dot(other.rotation);
        if (std::abs(dot) > 1e-12) {
            const double sign = dot > 0.0 ? 1.0 : -1.0;
            grad[pred_idx].d_rotation += weight * lambda * -sign * other.rotation;
        }
    };

    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::size_t j = nearest(pred.splats[i], gt, lambda, match);
        add_pair_grad(i, gt.splats[j], 1.0 / pred.size());
    }
    for (std::size_t j = 0; j < gt.size(); ++j) {
        const std::size_t i = nearest(gt.splats[j], pred, lambda, match);
        add_pair_grad(i, gt.splats[j], 1.0 / gt.size());
    }
    return grad;
}

std::vector<SplatScene> rollout(const DynamicsModel& model, const SplatScene& scene,
                                const std::vector<sim::Action>& actions, double omega) {
    std::vector<SplatScene> scenes;
    scenes.reserve(actions.size() + 1);
    scenes.push_back(scene);
    for (const sim::Action& action : actions) {
        const SceneGraph graph = build_graph(scenes.back(), omega);
        const Deltas deltas = forward(model, graph, action);
        scenes.push_back(apply(scenes.back(), deltas));
    }
    return scenes;
}

} // namespace gsmpc::dyn
