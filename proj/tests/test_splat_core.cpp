#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gsmpc/splat/density.hpp"
#include "gsmpc/splat/fit.hpp"
#include "gsmpc/splat/losses.hpp"
#include "gsmpc/splat/render.hpp"
#include "gsmpc/splat/scene_io.hpp"
#include "test_support.hpp"

using namespace gsmpc;
using namespace gsmpc::splat;
using gsmpc::test::compare_gradients;
using gsmpc::test::numeric_gradient;

namespace {

CameraView test_camera(int size = 16, double focal = 20.0) {
    CameraView view;
    view.width = size;
    view.height = size;
    view.fx = view.fy = focal;
    view.cx = 0.5 * size;
    view.cy = 0.5 * size;
    return view;
}

Splat make_splat(const Vec3& pos, const Vec3& color, double sigma, const Vec3& scale,
                 const Vec4& rot = quat::identity()) {
    Splat s;
    s.position = pos;
    s.color = color;
    s.opacity = sigma;
    s.scale = scale;
    s.rotation = rot;
    return s;
}

/// Position that projects exactly onto the center of pixel (px, py).
Vec3 at_pixel(const CameraView& view, int px, int py, double depth) {
    return Vec3((px + 0.5 - view.cx) / view.fx * depth, (py + 0.5 - view.cy) / view.fy * depth,
                depth);
}

} // namespace

TEST_CASE("quaternion rotation matches known cases") {
    CHECK(quat::to_rotation(quat::identity()).isApprox(Mat3::Identity(), 1e-12));

    const Vec4 rz90 = quat::from_axis_angle(Vec3(0, 0, 1), M_PI / 2.0);
    Mat3 expected;
    expected << 0, -1, 0,
        1, 0, 0,
        0, 0, 1;
    CHECK(quat::to_rotation(rz90).isApprox(expected, 1e-12));
}

TEST_CASE("quaternion jacobians agree with finite differences") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec4 q = test::random_quat(rng);
        const auto jac = quat::rotation_jacobian(q);
        for (int k = 0; k < 4; ++k) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    const double fd = test::central_diff(
                        [&](double v) {
                            Vec4 probe = q;
                            probe[k] = v;
                            return quat::to_rotation(probe)(r, c);
                        },
                        q[k], 1e-6);
                    CHECK(jac[k](r, c) == doctest::Approx(fd).epsilon(1e-4));
                }
            }
        }

        const Vec4 a = test::random_quat(rng);
        const Vec4 b = test::random_quat(rng);
        CHECK((quat::left_product_matrix(a) * b).isApprox(quat::multiply(a, b), 1e-12));
        CHECK((quat::right_product_matrix(b) * a).isApprox(quat::multiply(a, b), 1e-12));
    }
}

TEST_CASE("build_covariance identity and diagonal cases") {
    CHECK(build_covariance(make_splat(Vec3::Zero(), Vec3::Zero(), 1.0, Vec3(1, 1, 1)))
              .isApprox(Mat3::Identity(), 1e-12));
    CHECK(build_covariance(make_splat(Vec3::Zero(), Vec3::Zero(), 1.0, Vec3(2, 1, 1)))
              .isApprox(Vec3(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST_CASE("build_covariance rotates the scale ellipsoid") {
    // 90 degrees about z maps the x half-axis onto y: diag(4,1,1) -> diag(1,4,1).
    const Vec4 rz90 = quat::from_axis_angle(Vec3(0, 0, 1), M_PI / 2.0);
    const Mat3 cov =
        build_covariance(make_splat(Vec3::Zero(), Vec3::Zero(), 1.0, Vec3(2, 1, 1), rz90));
    CHECK(cov.isApprox(Vec3(1, 4, 1).asDiagonal().toDenseMatrix(), 1e-9));
}

TEST_CASE("project_covariance on the optical axis") {
    const CameraView view = test_camera(16, 20.0);
    const double sigma = 0.05, depth = 2.0;
    const Mat3 cov3d = sigma * sigma * Mat3::Identity();
    Mat2 projected = project_covariance(cov3d, Vec3(0, 0, depth), view);
    projected.diagonal().array() -= kCovarianceFloor;
    const double expected = (view.fx / depth) * (view.fx / depth) * sigma * sigma;
    CHECK(projected.isApprox(expected * Mat2::Identity(), 1e-9));
}

TEST_CASE("project_covariance rejects splats behind the camera") {
    const CameraView view = test_camera();
    CHECK_THROWS_AS(project_covariance(Mat3::Identity(), Vec3(0, 0, -1.0), view), BehindCamera);
    CHECK_THROWS_AS(project_covariance(Mat3::Identity(), Vec3(0, 0, 0.0), view), BehindCamera);
}

TEST_CASE("render of an empty scene is the background") {
    const CameraView view = test_camera();
    const Vec3 bg(0.2, 0.4, 0.6);
    const Image img = render(SplatScene{}, view, bg);
    for (const Vec3& c : img.rgb)
        CHECK(c.isApprox(bg, 1e-15));
}

TEST_CASE("opaque splat centered on a pixel shades that pixel with its color") {
    const CameraView view = test_camera();
    SplatScene scene;
    scene.splats.push_back(make_splat(at_pixel(view, 8, 8, 1.0), Vec3(0.9, 0.1, 0.3), 1.0,
                                      Vec3::Constant(0.02)));
    const Image img = render(scene, view, Vec3(0.5, 0.5, 0.5));
    CHECK(img.at(8, 8).isApprox(Vec3(0.9, 0.1, 0.3), 1e-12));
}

TEST_CASE("two overlapping splats blend front to back") {
    const CameraView view = test_camera();
    const Vec3 red(1, 0, 0), blue(0, 0, 1);
    SplatScene scene;
    // Declaration order is back-to-front on purpose; the renderer must sort.
    scene.splats.push_back(make_splat(at_pixel(view, 8, 8, 1.1), blue, 1.0, Vec3::Constant(0.02)));
    scene.splats.push_back(make_splat(at_pixel(view, 8, 8, 0.9), red, 0.5, Vec3::Constant(0.02)));
    const Image img = render(scene, view, Vec3(0.7, 0.7, 0.7));
    CHECK(img.at(8, 8).isApprox(0.5 * red + 0.5 * blue, 1e-12));
}

TEST_CASE("rendering is order independent for non-overlapping splats") {
    std::mt19937_64 rng(11);
    const CameraView view = test_camera(32, 40.0);
    std::uniform_real_distribution<double> jitter(-0.004, 0.004);
    std::uniform_real_distribution<double> unit(0.05, 0.95);

    for (int trial = 0; trial < 50; ++trial) {
        SplatScene scene;
        // 4x4 world grid, pitch wide enough that 3-sigma footprints stay apart.
        for (int gy = 0; gy < 4; ++gy) {
            for (int gx = 0; gx < 4; ++gx) {
                const Vec3 pos(-0.27 + 0.18 * gx + jitter(rng), -0.27 + 0.18 * gy + jitter(rng),
                               1.0 + 0.1 * unit(rng));
                scene.splats.push_back(make_splat(pos, Vec3(unit(rng), unit(rng), unit(rng)),
                                                  unit(rng), Vec3::Constant(0.01),
                                                  test::random_quat(rng)));
            }
        }
        const Image base = render(scene, view, Vec3(0.1, 0.1, 0.1));

        SplatScene shuffled = scene;
        std::shuffle(shuffled.splats.begin(), shuffled.splats.end(), rng);
        const Image again = render(shuffled, view, Vec3(0.1, 0.1, 0.1));
        double max_diff = 0.0;
        for (std::size_t i = 0; i < base.rgb.size(); ++i)
            max_diff = std::max(max_diff, (base.rgb[i] - again.rgb[i]).cwiseAbs().maxCoeff());
        CHECK(max_diff < 1e-6);
    }
}

TEST_CASE("raising opacity never lowers a splat's own contribution") {
    std::mt19937_64 rng(13);
    const CameraView view = test_camera();
    std::uniform_real_distribution<double> unit(0.1, 0.9);

    SplatScene scene;
    for (int i = 0; i < 5; ++i)
        scene.splats.push_back(make_splat(at_pixel(view, 6 + i, 8, 1.0 + 0.05 * i),
                                          Vec3(unit(rng), unit(rng), unit(rng)), unit(rng),
                                          Vec3::Constant(0.1)));

    const auto contribution = [&](const SplatScene& s, int splat_idx, int px, int py) {
        const RenderCache cache = project_scene(s, view, Vec3::Zero());
        const PixelFragments frags = pixel_fragments(cache, px + 0.5, py + 0.5);
        for (const Fragment& f : frags.fragments)
            if (cache.projected[f.proj_index].index == splat_idx)
                return f.alpha * f.transmittance;
        return 0.0;
    };

    for (int splat_idx = 0; splat_idx < 5; ++splat_idx) {
        SplatScene bumped = scene;
        bumped.splats[splat_idx].opacity =
            std::min(1.0, bumped.splats[splat_idx].opacity + 0.2);
        for (int px = 0; px < 16; px += 3) {
            for (int py = 0; py < 16; py += 3) {
                const double before = contribution(scene, splat_idx, px, py);
                const double after = contribution(bumped, splat_idx, px, py);
                CHECK(after >= before - 1e-12);
            }
        }
    }
}

TEST_CASE("ssim basics") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image a(16, 16);
    for (Vec3& c : a.rgb)
        c = Vec3(unit(rng), unit(rng), unit(rng));

    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    Image b(16, 16);
    for (Vec3& c : b.rgb)
        c = Vec3(unit(rng), unit(rng), unit(rng));
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);

    Image wrong(8, 16);
    CHECK_THROWS_AS(ssim(a, wrong), DimensionMismatch);
}

TEST_CASE("ssim of constant images follows the closed form") {
    const double mu_x = 0.8, mu_y = 0.3;
    Image a(16, 16, Vec3::Constant(mu_x));
    Image b(16, 16, Vec3::Constant(mu_y));
    const SsimConfig cfg;
    const double expected =
        (2.0 * mu_x * mu_y + cfg.c1) / (mu_x * mu_x + mu_y * mu_y + cfg.c1);
    CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("recon_loss cases") {
    Image zeros(16, 16, Vec3::Zero());
    Image ones(16, 16, Vec3::Ones());

    CHECK(recon_loss(ones, ones) == doctest::Approx(0.0));

    const SsimConfig cfg;
    const double ssim_const = cfg.c1 / (1.0 + cfg.c1);
    CHECK(recon_loss(ones, zeros) ==
          doctest::Approx(1.0 + 0.25 * (1.0 - ssim_const)).epsilon(1e-12));

    CHECK(recon_loss(ones, zeros, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("density basics") {
    CHECK(density(SplatScene{}, Vec3(0.3, 0.1, 0.2)) == doctest::Approx(0.0));

    SplatScene one;
    one.splats.push_back(make_splat(Vec3(0.1, 0.2, 0.3), Vec3::Zero(), 0.7,
                                    Vec3::Constant(0.05)));
    CHECK(density(one, Vec3(0.1, 0.2, 0.3)) == doctest::Approx(0.7).epsilon(1e-12));

    SplatScene two = one;
    two.splats.push_back(two.splats[0]);
    two.splats[0].opacity = two.splats[1].opacity = 0.5;
    CHECK(density(two, Vec3(0.1, 0.2, 0.3)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("density is nonnegative and vanishes far away") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SplatScene scene;
    for (int i = 0; i < 6; ++i)
        scene.splats.push_back(make_splat(Vec3(unit(rng), unit(rng), unit(rng)) * 0.2,
                                          Vec3::Zero(), unit(rng),
                                          Vec3::Constant(0.02 + 0.05 * unit(rng)),
                                          test::random_quat(rng)));
    for (int i = 0; i < 100; ++i) {
        const Vec3 x = Vec3(unit(rng), unit(rng), unit(rng)) * 0.6 - Vec3::Constant(0.3);
        CHECK(density(scene, x) >= 0.0);
    }
    CHECK(density(scene, Vec3(50, 50, 50)) < 1e-12);
}

namespace {

/// Deterministic 3-splat scene whose splats blanket the whole 16x16 image, so
/// the 3-sigma rasterization cutoff never clips inside the pixel grid and the
/// loss stays smooth under finite-difference probes.
SplatScene gradcheck_scene() {
    SplatScene scene;
    scene.splats.push_back(make_splat(Vec3(0.05, -0.02, 1.0), Vec3(0.8, 0.3, 0.2), 0.55,
                                      Vec3(0.7, 0.5, 0.4),
                                      quat::from_axis_angle(Vec3(0.2, 1.0, 0.3), 0.6)));
    scene.splats.push_back(make_splat(Vec3(-0.07, 0.04, 1.3), Vec3(0.2, 0.7, 0.4), 0.4,
                                      Vec3(0.6, 0.8, 0.5),
                                      quat::from_axis_angle(Vec3(1.0, -0.3, 0.5), -0.9)));
    scene.splats.push_back(make_splat(Vec3(0.01, 0.06, 1.7), Vec3(0.3, 0.2, 0.9), 0.7,
                                      Vec3(0.9, 0.6, 0.7),
                                      quat::from_axis_angle(Vec3(-0.4, 0.2, 1.0), 1.3)));
    return scene;
}

std::vector<std::pair<Image, CameraView>> gradcheck_views(const SplatScene& scene) {
    const CameraView front = test_camera(16, 20.0);
    CameraView side = front;
    const double angle = 0.35;
    side.rotation = Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
    side.translation = Vec3(0.1, -0.05, 0.15);

    // Ground truth images come from a perturbed copy of the scene so that the
    // loss has meaningful gradients everywhere.
    SplatScene shifted = scene;
    for (std::size_t i = 0; i < shifted.splats.size(); ++i) {
        shifted.splats[i].position += Vec3(0.02, -0.015, 0.03) * (1.0 + 0.3 * i);
        shifted.splats[i].color = (shifted.splats[i].color.array() * 0.8 + 0.1).matrix();
    }
    std::vector<std::pair<Image, CameraView>> views;
    views.emplace_back(render(shifted, front, Vec3(0.3, 0.3, 0.3)), front);
    views.emplace_back(render(shifted, side, Vec3(0.3, 0.3, 0.3)), side);
    return views;
}

} // namespace

TEST_CASE("recon_loss gradients match finite differences on a 3-splat scene") {
    const SplatScene scene = gradcheck_scene();
    const auto views = gradcheck_views(scene);
    const Vec3 bg(0.3, 0.3, 0.3);

    SceneGrad grad = zero_grad(scene);
    for (const auto& [gt, view] : views) {
        const RenderCache cache = project_scene(scene, view, bg);
        const Image recon = render_from_cache(cache);
        accumulate(grad, render_backward(cache, recon_loss_backward(recon, gt)));
    }
    const VecX analytic = test::scene_grad_to_vector(grad);

    const VecX x0 = test::splat_scene_to_vector(scene);
    const VecX numeric = numeric_gradient(
        [&](const VecX& x) {
            return scene_loss(test::vector_to_splat_scene(x, scene), views, bg, 0.25);
        },
        x0, 1e-4);

    const auto check = compare_gradients(analytic, numeric);
    INFO("max rel err ", check.max_rel_err, " at index ", check.worst_index, " analytic ",
         check.worst_analytic, " numeric ", check.worst_numeric);
    CHECK(check.ok(1e-3));
}

TEST_CASE("density gradients match finite differences") {
    const SplatScene scene = gradcheck_scene();
    const std::vector<Vec3> queries = {Vec3(0.1, 0.0, 1.1), Vec3(-0.2, 0.1, 1.4),
                                       Vec3(0.0, -0.1, 1.6)};

    const auto loss = [&](const SplatScene& s) {
        double total = 0.0;
        for (const Vec3& q : queries)
            total += density(s, q) * (1.0 + 0.1 * q.x());
        return total;
    };

    SceneGrad grad = zero_grad(scene);
    const DensityCache cache = build_density_cache(scene);
    for (const Vec3& q : queries)
        density_backward(cache, q, 1.0 + 0.1 * q.x(), grad);
    const VecX analytic = test::scene_grad_to_vector(grad);

    const VecX numeric = numeric_gradient(
        [&](const VecX& x) { return loss(test::vector_to_splat_scene(x, scene)); },
        test::splat_scene_to_vector(scene), 1e-5);

    const auto check = compare_gradients(analytic, numeric);
    INFO("max rel err ", check.max_rel_err, " at index ", check.worst_index);
    CHECK(check.ok(1e-3));
}

TEST_CASE("fit_scene degenerate configurations") {
    const SplatScene scene = gradcheck_scene();
    const auto views = gradcheck_views(scene);

    SUBCASE("zero epochs returns the init unchanged") {
        FitConfig cfg;
        cfg.epochs = 0;
        const FitResult res = fit_scene(views, scene, cfg, Vec3(0.3, 0.3, 0.3));
        CHECK(test::splat_scene_to_vector(res.scene)
                  .isApprox(test::splat_scene_to_vector(scene), 0.0));
    }

    SUBCASE("lr zero is the identity on parameters") {
        FitConfig cfg;
        cfg.epochs = 5;
        cfg.lr = 0.0;
        const FitResult res = fit_scene(views, scene, cfg, Vec3(0.3, 0.3, 0.3));
        CHECK((test::splat_scene_to_vector(res.scene) - test::splat_scene_to_vector(scene))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(fit_scene({}, scene, FitConfig{}), NoViews);
        CHECK_THROWS_AS(fit_scene(views, SplatScene{}, FitConfig{}), EmptyScene);
    }
}

TEST_CASE("fit_scene is a fixed point on a perfect init") {
    const SplatScene scene = gradcheck_scene();
    const Vec3 bg(0.3, 0.3, 0.3);
    std::vector<std::pair<Image, CameraView>> views;
    for (const auto& [unused, view] : gradcheck_views(scene))
        views.emplace_back(render(scene, view, bg), view);

    FitConfig cfg;
    cfg.epochs = 20;
    const FitResult res = fit_scene(views, scene, cfg, bg);
    CHECK(res.final_loss <= 1e-9);
    CHECK((test::splat_scene_to_vector(res.scene) - test::splat_scene_to_vector(scene))
              .cwiseAbs()
              .maxCoeff() < 1e-3);
}

TEST_CASE("fit_scene pulls a splat toward a translated target") {
    const CameraView view = test_camera(16, 20.0);
    const Vec3 bg(0.1, 0.1, 0.1);

    SplatScene scene;
    scene.splats.push_back(
        make_splat(at_pixel(view, 8, 8, 1.0), Vec3(0.9, 0.6, 0.2), 0.8, Vec3::Constant(0.08)));

    SplatScene target = scene;
    target.splats[0].position = at_pixel(view, 10, 8, 1.0);  // two pixels to the right

    std::vector<std::pair<Image, CameraView>> views;
    views.emplace_back(render(target, view, bg), view);

    FitConfig cfg;
    cfg.epochs = 300;
    cfg.lr = 0.005;
    const FitResult res = fit_scene(views, scene, cfg, bg);

    CHECK(res.final_loss < res.initial_loss);
    const double before = (scene.splats[0].position - target.splats[0].position).norm();
    const double after = (res.scene.splats[0].position - target.splats[0].position).norm();
    CHECK(after < before);
}

TEST_CASE("scene json round trip") {
    const SplatScene scene = gradcheck_scene();
    const std::string dir = test::scratch_dir("scene_io");
    save_scene(scene, dir + "/scene.json");
    const SplatScene loaded = load_scene(dir + "/scene.json");
    REQUIRE(loaded.size() == scene.size());
    CHECK(test::splat_scene_to_vector(loaded)
              .isApprox(test::splat_scene_to_vector(scene), 1e-12));

    const CameraView view = test_camera(24, 33.0);
    save_camera(view, dir + "/camera.json");
    const CameraView cam = load_camera(dir + "/camera.json");
    CHECK(cam.rotation.isApprox(view.rotation, 1e-12));
    CHECK(cam.fx == view.fx);
    CHECK(cam.width == view.width);
}
