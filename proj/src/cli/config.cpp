#include "gsmpc/cli/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <json.hpp>

namespace gsmpc::cli {

using nlohmann::json;

std::vector<sim::CameraView> SimSection::make_rig(int cameras) const {
    const Box3 ws = workspace();
    const Vec3 lookat(ws.center().x(), ws.center().y(), 0.0);
    return sim::make_rig(cameras > 0 ? cameras : n_cameras, cam_radius, cam_elevation_deg, lookat,
                         image_size, image_size, fov_deg);
}

PerceptionConfig RunConfig::perception(int fit_epochs) const {
    PerceptionConfig p;
    p.splat_count = fit.splat_count;
    p.splat_factor = fit.splat_factor;
    p.init_scale = fit.init_scale;
    p.init_sigma = fit.init_sigma;
    p.sigma_min = fit.sigma_min;
    p.crop_to_workspace = fit.crop_to_workspace;
    p.filter_box = default_filter_box(sim.workspace(), sim.particle_radius);
    p.background = sim::ObserveParams{}.background_color;
    p.fit.lr = fit.lr;
    p.fit.epochs = fit_epochs > 0 ? fit_epochs : fit.epochs;
    p.fit.beta = fit.beta;
    return p;
}

dyn::TrainConfig RunConfig::train_config() const {
    dyn::TrainConfig t;
    t.lr = train.lr;
    t.epochs = train.epochs;
    t.batch = train.batch;
    t.lambda = train.lambda;
    t.omega = train.omega;
    t.seed = seed;
    t.match = train.match == "position" ? dyn::ChamferMatch::PositionOnly
                                        : dyn::ChamferMatch::FullMetric;
    return t;
}

plan::PlanConfig RunConfig::plan_config() const {
    plan::PlanConfig p;
    p.horizon = plan.horizon;
    p.samples = plan.samples;
    p.grad_steps = plan.grad_steps;
    p.action_lr = plan.action_lr;
    p.query_grid = plan.query_grid;
    p.query_z = sim.particle_radius;
    p.max_mpc_iters = plan.max_mpc_iters;
    p.omega = train.omega;
    p.workspace = sim.workspace();
    p.min_push = sim.min_push;
    p.max_push = sim.max_push;
    p.biased_sampling = plan.biased_sampling;
    p.threads = threads;
    return p;
}

namespace {

template <typename Section>
using Setter = std::function<void(Section&, const json&)>;

Vec3 vec3_from(const json& v) {
    if (!v.is_array() || v.size() != 3)
        throw ParseError("expected a 3-element array");
    return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

#define FIELD(map, type, name, expr)                                        \
    map[#name] = [](type& s, const json& v) { s.name = expr; }

const std::map<std::string, Setter<SimSection>>& sim_setters() {
    static const auto setters = [] {
        std::map<std::string, Setter<SimSection>> m;
        FIELD(m, SimSection, n_particles, v.get<int>());
        FIELD(m, SimSection, particle_radius, v.get<double>());
        FIELD(m, SimSection, workspace_min, vec3_from(v));
        FIELD(m, SimSection, workspace_max, vec3_from(v));
        FIELD(m, SimSection, pusher_len, v.get<double>());
        FIELD(m, SimSection, substeps, v.get<int>());
        FIELD(m, SimSection, resolve_iters, v.get<int>());
        FIELD(m, SimSection, min_push, v.get<double>());
        FIELD(m, SimSection, max_push, v.get<double>());
        FIELD(m, SimSection, n_cameras, v.get<int>());
        FIELD(m, SimSection, image_size, v.get<int>());
        FIELD(m, SimSection, fov_deg, v.get<double>());
        FIELD(m, SimSection, cam_radius, v.get<double>());
        FIELD(m, SimSection, cam_elevation_deg, v.get<double>());
        FIELD(m, SimSection, n_traj, v.get<int>());
        FIELD(m, SimSection, steps_per_traj, v.get<int>());
        FIELD(m, SimSection, task, v.get<std::string>());
        FIELD(m, SimSection, target_radius, v.get<double>());
        return m;
    }();
    return setters;
}

const std::map<std::string, Setter<FitSection>>& fit_setters() {
    static const auto setters = [] {
        std::map<std::string, Setter<FitSection>> m;
        FIELD(m, FitSection, epochs, v.get<int>());
        FIELD(m, FitSection, lr, v.get<double>());
        FIELD(m, FitSection, beta, v.get<double>());
        FIELD(m, FitSection, splat_count, v.get<int>());
        FIELD(m, FitSection, splat_factor, v.get<double>());
        FIELD(m, FitSection, init_scale, v.get<double>());
        FIELD(m, FitSection, init_sigma, v.get<double>());
        FIELD(m, FitSection, sigma_min, v.get<double>());
        FIELD(m, FitSection, crop_to_workspace, v.get<bool>());
        return m;
    }();
    return setters;
}

const std::map<std::string, Setter<TrainSection>>& train_setters() {
    static const auto setters = [] {
        std::map<std::string, Setter<TrainSection>> m;
        FIELD(m, TrainSection, lr, v.get<double>());
        FIELD(m, TrainSection, epochs, v.get<int>());
        FIELD(m, TrainSection, batch, v.get<int>());
        FIELD(m, TrainSection, lambda, v.get<double>());
        FIELD(m, TrainSection, hidden, v.get<int>());
        FIELD(m, TrainSection, gamma, v.get<int>());
        FIELD(m, TrainSection, omega, v.get<double>());
        FIELD(m, TrainSection, match, v.get<std::string>());
        return m;
    }();
    return setters;
}

const std::map<std::string, Setter<PlanSection>>& plan_setters() {
    static const auto setters = [] {
        std::map<std::string, Setter<PlanSection>> m;
        FIELD(m, PlanSection, horizon, v.get<int>());
        FIELD(m, PlanSection, samples, v.get<int>());
        FIELD(m, PlanSection, grad_steps, v.get<int>());
        FIELD(m, PlanSection, action_lr, v.get<double>());
        FIELD(m, PlanSection, query_grid, v.get<int>());
        FIELD(m, PlanSection, max_mpc_iters, v.get<int>());
        FIELD(m, PlanSection, biased_sampling, v.get<bool>());
        FIELD(m, PlanSection, mpc_fit_epochs, v.get<int>());
        return m;
    }();
    return setters;
}

#undef FIELD

template <typename Section>
void apply_section(Section& section, const json& j, const std::string& name,
                   const std::map<std::string, Setter<Section>>& setters) {
    for (const auto& [key, value] : j.items()) {
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ParseError("unknown config key: " + name + "." + key);
        try {
            it->second(section, value);
        } catch (const json::exception& e) {
            throw ParseError("bad value for " + name + "." + key + ": " + e.what());
        }
    }
}

void apply_json(RunConfig& config, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "seed")
            config.seed = value.get<std::uint64_t>();
        else if (key == "out")
            config.out = value.get<std::string>();
        else if (key == "threads")
            config.threads = value.get<int>();
        else if (key == "sim")
            apply_section(config.sim, value, "sim", sim_setters());
        else if (key == "fit")
            apply_section(config.fit, value, "fit", fit_setters());
        else if (key == "train")
            apply_section(config.train, value, "train", train_setters());
        else if (key == "plan")
            apply_section(config.plan, value, "plan", plan_setters());
        else
            throw ParseError("unknown config key: " + key);
    }
}

} // namespace

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config parse error: ") + e.what());
    }
    RunConfig config;
    apply_json(config, j);
    return config;
}

RunConfig load_config(const std::string& path) {
    if (path.empty())
        return RunConfig{};
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
    for (const std::string& raw : overrides) {
        std::string arg = raw;
        if (arg.rfind("--", 0) == 0)
            arg = arg.substr(2);
        const auto eq = arg.find('=');
        if (eq == std::string::npos)
            throw ParseError("override must look like --section.key=value: " + raw);
        const std::string path = arg.substr(0, eq);
        const std::string value_text = arg.substr(eq + 1);

        json value;
        try {
            value = json::parse(value_text);
        } catch (const json::exception&) {
            value = value_text;  // bare strings are allowed unquoted
        }

        const auto dot = path.find('.');
        json j;
        if (dot == std::string::npos)
            j[path] = value;
        else
            j[path.substr(0, dot)][path.substr(dot + 1)] = value;
        apply_json(config, j);
    }
}

} // namespace gsmpc::cli
