#pragma once

#include <string>

#include "gsmpc/splat/types.hpp"

namespace gsmpc::splat {

/// JSON: {"frame_id": int, "splats": [{"g":[x,y,z], "r":[w,x,y,z],
/// "s":[sx,sy,sz], "sigma":f, "c":[r,g,b]}, ...]}
void save_scene(const SplatScene& scene, const std::string& path);
SplatScene load_scene(const std::string& path);

/// JSON: {"pose": 4x4 row-major world->camera, "fx","fy","cx","cy",
/// "width","height"}
void save_camera(const CameraView& view, const std::string& path);
CameraView load_camera(const std::string& path);

} // namespace gsmpc::splat
