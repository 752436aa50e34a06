#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsmpc/splat/types.hpp"

namespace gsmpc::scene_init {

using splat::CameraView;
using splat::Image;
using splat::SplatScene;

/// RGBD frame with the camera it was taken from. Depth of 0 marks invalid
/// pixels.
struct RGBDObservation {
    Image image;  // must carry depth
    CameraView view;
};

struct ColoredPoint {
    Vec3 position;
    Vec3 color;
};

struct PointCloud {
    std::vector<ColoredPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Back-project every valid-depth pixel to the world frame, carrying color.
PointCloud lift(const std::vector<RGBDObservation>& observations);

/// Drop points outside the box (closed test).
PointCloud crop(const PointCloud& cloud, const Box3& box);

/// Greedy farthest point sampling. The first point is drawn uniformly with
/// the seeded RNG; clouds of size <= k are returned unchanged.
PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t k, std::uint64_t seed);

/// One splat per point: identity rotation, isotropic scale, shared opacity.
SplatScene init_splats(const PointCloud& cloud, double default_scale, double default_sigma);

/// Keep splats inside the workspace box with opacity >= sigma_min; survivor
/// order is preserved.
SplatScene filter_scene(const SplatScene& scene, const Box3& workspace, double sigma_min);

/// Observation bundle on disk: view_%02d.png, depth_%02d.bin, camera_%02d.json.
void save_observations(const std::vector<RGBDObservation>& observations, const std::string& dir);
std::vector<RGBDObservation> load_observations(const std::string& dir);

} // namespace gsmpc::scene_init
