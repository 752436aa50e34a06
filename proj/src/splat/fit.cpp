#include "gsmpc/splat/fit.hpp"

#include <cmath>

#include "gsmpc/splat/render.hpp"

namespace gsmpc::splat {

namespace {

constexpr int kParamsPerSplat = 14;  // g(3) r(4) s(3) sigma(1) c(3)

void scene_to_params(const SplatScene& scene, VecX& p) {
    p.resize(static_cast<Eigen::Index>(scene.size()) * kParamsPerSplat);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Splat& s = scene.splats[i];
        auto block = p.segment(static_cast<Eigen::Index>(i) * kParamsPerSplat, kParamsPerSplat);
        block << s.position, s.rotation, s.scale, s.opacity, s.color;
    }
}

void params_to_scene(const VecX& p, SplatScene& scene) {
    for (std::size_t i = 0; i < scene.size(); ++i) {
        Splat& s = scene.splats[i];
        const auto block =
            p.segment(static_cast<Eigen::Index>(i) * kParamsPerSplat, kParamsPerSplat);
        s.position = block.segment<3>(0);
        s.rotation = block.segment<4>(3);
        s.scale = block.segment<3>(7);
        s.opacity = block[10];
        s.color = block.segment<3>(11);
    }
}

void grad_to_vector(const SceneGrad& grad, VecX& g) {
    g.resize(static_cast<Eigen::Index>(grad.size()) * kParamsPerSplat);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        auto block = g.segment(static_cast<Eigen::Index>(i) * kParamsPerSplat, kParamsPerSplat);
        block << grad[i].d_position, grad[i].d_rotation, grad[i].d_scale, grad[i].d_opacity,
            grad[i].d_color;
    }
}

} // namespace

double scene_loss(const SplatScene& scene, const std::vector<std::pair<Image, CameraView>>& views,
                  const Vec3& background, double beta, const SsimConfig& ssim_cfg) {
    double total = 0.0;
    for (const auto& [gt, view] : views)
        total += recon_loss(render(scene, view, background), gt, beta, ssim_cfg);
    return total;
}

FitResult fit_scene(const std::vector<std::pair<Image, CameraView>>& views,
                    const SplatScene& init, const FitConfig& config, const Vec3& background) {
    if (views.empty())
        throw NoViews("fit_scene needs at least one view");
    if (init.empty())
        throw EmptyScene("fit_scene needs a non-empty initial scene");

    FitResult result;
    result.scene = init;
    result.initial_loss = scene_loss(init, views, background, config.beta, config.ssim);
    result.final_loss = result.initial_loss;
    if (config.epochs <= 0)
        return result;

    SplatScene scene = init;
    VecX params;
    scene_to_params(scene, params);
    VecX m = VecX::Zero(params.size());
    VecX v = VecX::Zero(params.size());

    SplatScene best = init;
    double best_loss = result.initial_loss;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        SceneGrad grad = zero_grad(scene);
        double loss = 0.0;
        for (const auto& [gt, view] : views) {
            RenderCache cache = project_scene(scene, view, background);
            Image recon = render_from_cache(cache);
            loss += recon_loss(recon, gt, config.beta, config.ssim);
            const auto d_image = recon_loss_backward(recon, gt, config.beta, config.ssim);
            accumulate(grad, render_backward(cache, d_image));
        }
        result.loss_curve.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best = scene;
        }

        VecX g;
        grad_to_vector(grad, g);
        const double bc1 = 1.0 - std::pow(config.beta1, epoch);
        const double bc2 = 1.0 - std::pow(config.beta2, epoch);
        for (Eigen::Index k = 0; k < params.size(); ++k) {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            params[k] -= config.lr * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
        params_to_scene(params, scene);
        for (Splat& s : scene.splats)
            s.project_to_valid(config.scale_min, config.scale_max);
        scene_to_params(scene, params);
    }

    // Keep whichever parameters scored best; evaluate the last step too.
    const double last_loss = scene_loss(scene, views, background, config.beta, config.ssim);
    if (last_loss < best_loss) {
        best_loss = last_loss;
        best = scene;
    }
    result.scene = best;
    result.final_loss = best_loss;
    return result;
}

} // namespace gsmpc::splat
