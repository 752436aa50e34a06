#pragma once

#include <string>
#include <vector>

#include "gsmpc/dyn/train.hpp"
#include "gsmpc/perception.hpp"
#include "gsmpc/plan/planner.hpp"
#include "gsmpc/sim/dataset.hpp"

namespace gsmpc::cli {

/// Simulator / rig / task section.
struct SimSection {
    int n_particles = 50;
    double particle_radius = 0.005;
    Vec3 workspace_min{-0.2, -0.2, 0.0};
    Vec3 workspace_max{0.2, 0.2, 0.05};
    double pusher_len = 0.10;
    int substeps = 20;
    int resolve_iters = 10;
    double min_push = 0.02;
    double max_push = 0.20;
    int n_cameras = 8;
    int image_size = 64;
    double fov_deg = 55.0;
    double cam_radius = 0.55;
    double cam_elevation_deg = 45.0;
    int n_traj = 100;
    int steps_per_traj = 8;
    std::string task = "collecting";  // collecting | splitting | redistributing | mix
    double target_radius = 0.06;

    Box3 workspace() const { return Box3{workspace_min, workspace_max}; }
    sim::StepParams step_params() const {
        return sim::StepParams{pusher_len, substeps, resolve_iters, min_push, max_push};
    }
    std::vector<sim::CameraView> make_rig(int cameras = 0) const;
};

struct FitSection {
    int epochs = 2000;
    double lr = 0.001;
    double beta = 0.25;
    int splat_count = 0;
    double splat_factor = 2.0;
    double init_scale = 0.0;
    double init_sigma = 0.9;
    double sigma_min = 0.05;
    bool crop_to_workspace = true;
};

struct TrainSection {
    double lr = 0.001;
    int epochs = 100;
    int batch = 1;
    double lambda = 0.1;
    int hidden = 256;
    int gamma = 2;
    double omega = 0.1;
    std::string match = "full";  // full | position
};

struct PlanSection {
    int horizon = 3;
    int samples = 16;
    int grad_steps = 10;
    double action_lr = 0.01;
    int query_grid = 32;
    int max_mpc_iters = 30;
    bool biased_sampling = false;
    int mpc_fit_epochs = 120;  // fit epochs inside the MPC loop
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "runs";
    int threads = 1;
    SimSection sim;
    FitSection fit;
    TrainSection train;
    PlanSection plan;

    PerceptionConfig perception(int fit_epochs = 0) const;
    dyn::TrainConfig train_config() const;
    plan::PlanConfig plan_config() const;
};

/// Parse a config file; unknown keys are rejected. Missing file -> defaults.
RunConfig load_config(const std::string& path);
RunConfig config_from_json_text(const std::string& text);

/// Apply "--section.key=value" overrides (e.g. "--sim.n_particles=20").
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

} // namespace gsmpc::cli
