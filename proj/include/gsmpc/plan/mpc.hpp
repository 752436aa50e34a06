#pragma once

#include <optional>
#include <string>

#include "gsmpc/perception.hpp"
#include "gsmpc/plan/planner.hpp"
#include "gsmpc/sim/sim.hpp"

namespace gsmpc::plan {

struct EpisodeConfig {
    PlanConfig plan;
    PerceptionConfig perception;
    sim::StepParams step_params;
    sim::TaskSpec task;
    std::optional<sim::ParticleState> target_particles;  // for the Chamfer metric
    std::string out_dir;                                 // per-iteration renders + CSV when set
};

struct EpisodeIteration {
    int iter = 0;
    sim::Action action;
    double plan_cost = 0.0;
    double chamfer = 0.0;  // state error against target_particles, when known
    bool success = false;  // after executing the action
};

struct EpisodeLog {
    std::vector<EpisodeIteration> iterations;
    sim::ParticleState final_state;
    bool success = false;
    double initial_chamfer = 0.0;
    double final_chamfer = 0.0;
};

/// Closed loop: observe -> fit splats -> plan -> execute the first action,
/// until the task succeeds or max_mpc_iters is reached.
EpisodeLog mpc_execute(const sim::ParticleState& env_state, const SplatScene& target_scene,
                       const DynamicsModel& model, const EpisodeConfig& config,
                       const std::vector<sim::CameraView>& rig, std::uint64_t seed);

} // namespace gsmpc::plan
