#include "gsmpc/splat/scene_io.hpp"

#include <fstream>

#include <json.hpp>

namespace gsmpc::splat {

using nlohmann::json;

namespace {

json vec_to_json(const auto& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

template <typename V>
V vec_from_json(const json& arr) {
    V v;
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(v.size()))
        throw ParseError("bad vector length in scene file");
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = arr[i].get<double>();
    return v;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

} // namespace

void save_scene(const SplatScene& scene, const std::string& path) {
    json j;
    j["frame_id"] = scene.frame_id;
    json splats = json::array();
    for (const Splat& s : scene.splats) {
        splats.push_back({{"g", vec_to_json(s.position)},
                          {"r", vec_to_json(s.rotation)},
                          {"s", vec_to_json(s.scale)},
                          {"sigma", s.opacity},
                          {"c", vec_to_json(s.color)}});
    }
    j["splats"] = std::move(splats);
    write_json_file(j, path);
}

SplatScene load_scene(const std::string& path) {
    const json j = read_json_file(path);
    SplatScene scene;
    try {
        scene.frame_id = j.at("frame_id").get<int>();
        for (const json& js : j.at("splats")) {
            Splat s;
            s.position = vec_from_json<Vec3>(js.at("g"));
            s.rotation = vec_from_json<Vec4>(js.at("r"));
            s.scale = vec_from_json<Vec3>(js.at("s"));
            s.opacity = js.at("sigma").get<double>();
            s.color = vec_from_json<Vec3>(js.at("c"));
            scene.splats.push_back(s);
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return scene;
}

void save_camera(const CameraView& view, const std::string& path) {
    json j;
    json pose = json::array();
    const Mat4 m = view.pose_matrix();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            pose.push_back(m(r, c));
    j["pose"] = std::move(pose);
    j["fx"] = view.fx;
    j["fy"] = view.fy;
    j["cx"] = view.cx;
    j["cy"] = view.cy;
    j["width"] = view.width;
    j["height"] = view.height;
    write_json_file(j, path);
}

CameraView load_camera(const std::string& path) {
    const json j = read_json_file(path);
    CameraView view;
    try {
        const json& pose = j.at("pose");
        if (!pose.is_array() || pose.size() != 16)
            throw ParseError(path + ": pose must be a 16-element row-major array");
        Mat4 m;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                m(r, c) = pose[4 * r + c].get<double>();
        view.rotation = m.topLeftCorner<3, 3>();
        view.translation = m.topRightCorner<3, 1>();
        view.fx = j.at("fx").get<double>();
        view.fy = j.at("fy").get<double>();
        view.cx = j.at("cx").get<double>();
        view.cy = j.at("cy").get<double>();
        view.width = j.at("width").get<int>();
        view.height = j.at("height").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return view;
}

} // namespace gsmpc::splat
