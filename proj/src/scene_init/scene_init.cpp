#include "gsmpc/scene_init/scene_init.hpp"

#include <filesystem>
#include <limits>
#include <random>

#include "gsmpc/io/image_io.hpp"
#include "gsmpc/splat/scene_io.hpp"

namespace gsmpc::scene_init {

namespace fs = std::filesystem;

PointCloud lift(const std::vector<RGBDObservation>& observations) {
    if (observations.empty())
        throw NoObservations("lift needs at least one observation");
    PointCloud cloud;
    for (const RGBDObservation& obs : observations) {
        if (!obs.image.depth)
            throw NoObservations("observation has no depth channel");
        const auto& depth = *obs.image.depth;
        const CameraView& view = obs.view;
        for (int y = 0; y < obs.image.height; ++y) {
            for (int x = 0; x < obs.image.width; ++x) {
                const double d = depth[static_cast<std::size_t>(y) * obs.image.width + x];
                if (d <= 0.0)
                    continue;
                const double u = x + 0.5;
                const double v = y + 0.5;
                const Vec3 p_cam((u - view.cx) / view.fx * d, (v - view.cy) / view.fy * d, d);
                cloud.points.push_back({view.to_world(p_cam), obs.image.at(x, y)});
            }
        }
    }
    return cloud;
}

PointCloud crop(const PointCloud& cloud, const Box3& box) {
    PointCloud out;
    for (const ColoredPoint& p : cloud.points)
        if (box.contains(p.position))
            out.points.push_back(p);
    return out;
}

PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t k, std::uint64_t seed) {
    if (k < 1)
        throw InvalidArgument("farthest_point_sample needs k >= 1");
    if (cloud.empty())
        throw EmptyCloud("farthest_point_sample on an empty cloud");
    if (cloud.size() <= k)
        return cloud;

    std::mt19937_64 rng(seed);
    const std::size_t first =
        std::uniform_int_distribution<std::size_t>(0, cloud.size() - 1)(rng);

    std::vector<std::size_t> selected;
    selected.reserve(k);
    selected.push_back(first);

    std::vector<double> min_d2(cloud.size(), std::numeric_limits<double>::infinity());
    std::size_t last = first;
    while (selected.size() < k) {
        std::size_t best = 0;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double d2 = (cloud.points[i].position - cloud.points[last].position).squaredNorm();
            if (d2 < min_d2[i])
                min_d2[i] = d2;
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        selected.push_back(best);
        last = best;
    }

    PointCloud out;
    out.points.reserve(k);
    for (std::size_t i : selected)
        out.points.push_back(cloud.points[i]);
    return out;
}

SplatScene init_splats(const PointCloud& cloud, double default_scale, double default_sigma) {
    if (cloud.empty())
        throw EmptyCloud("init_splats on an empty cloud");
    SplatScene scene;
    scene.splats.reserve(cloud.size());
    for (const ColoredPoint& p : cloud.points) {
        splat::Splat s;
        s.position = p.position;
        s.color = p.color;
        s.rotation = quat::identity();
        s.scale = Vec3::Constant(default_scale);
        s.opacity = default_sigma;
        scene.splats.push_back(s);
    }
    return scene;
}

SplatScene filter_scene(const SplatScene& scene, const Box3& workspace, double sigma_min) {
    SplatScene out;
    out.frame_id = scene.frame_id;
    for (const splat::Splat& s : scene.splats)
        if (workspace.contains(s.position) && s.opacity >= sigma_min)
            out.splats.push_back(s);
    return out;
}

void save_observations(const std::vector<RGBDObservation>& observations, const std::string& dir) {
    fs::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const RGBDObservation& obs = observations[i];
        std::snprintf(name, sizeof(name), "view_%02zu.png", i);
        io::save_png(obs.image, (fs::path(dir) / name).string());
        std::snprintf(name, sizeof(name), "depth_%02zu.bin", i);
        if (!obs.image.depth)
            throw IoError("observation has no depth to save");
        io::save_depth(*obs.image.depth, obs.image.width, obs.image.height,
                       (fs::path(dir) / name).string());
        std::snprintf(name, sizeof(name), "camera_%02zu.json", i);
        splat::save_camera(obs.view, (fs::path(dir) / name).string());
    }
}

std::vector<RGBDObservation> load_observations(const std::string& dir) {
    std::vector<RGBDObservation> out;
    char name[32];
    for (std::size_t i = 0;; ++i) {
        std::snprintf(name, sizeof(name), "view_%02zu.png", i);
        const fs::path png_path = fs::path(dir) / name;
        if (!fs::exists(png_path))
            break;
        RGBDObservation obs;
        obs.image = io::load_png(png_path.string());
        std::snprintf(name, sizeof(name), "camera_%02zu.json", i);
        obs.view = splat::load_camera((fs::path(dir) / name).string());
        std::snprintf(name, sizeof(name), "depth_%02zu.bin", i);
        obs.image.depth =
            io::load_depth((fs::path(dir) / name).string(), obs.image.width, obs.image.height);
        out.push_back(std::move(obs));
    }
    if (out.empty())
        throw NoObservations("no observation bundle in " + dir);
    return out;
}

} // namespace gsmpc::scene_init
