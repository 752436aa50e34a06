#pragma once

#include <optional>
#include <string>

#include "gsmpc/sim/sim.hpp"

namespace gsmpc::sim {

struct TrajectoryStep {
    std::vector<RGBDObservation> observations;
    std::optional<Action> action;  // absent on the final step
    ParticleState particles;       // ground truth
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;  // steps_per_traj + 1 observation sets
    TaskSpec task;
};

struct DatasetConfig {
    int n_traj = 100;
    int steps_per_traj = 8;
    int n_particles = 50;
    double particle_radius = 0.005;
    Box3 workspace{Vec3(-0.2, -0.2, 0.0), Vec3(0.2, 0.2, 0.05)};
    StepParams step_params;
    ObserveParams observe_params;
    OracleParams oracle_params;
    std::vector<TaskKind> task_mix{TaskKind::Collecting};
    std::uint64_t seed = 0;
};

/// Random task with seeded target regions, sized for the workspace.
TaskSpec sample_task(TaskKind kind, const Box3& workspace, double particle_radius, int n_particles,
                     std::mt19937_64& rng);

/// Seeded initial scatters rolled forward under the oracle policy. Pure
/// function of its arguments.
std::vector<Trajectory> gen_dataset(const DatasetConfig& config,
                                    const std::vector<CameraView>& rig);

/// Layout: dir/traj_%04d/step_%03d/ with the observation bundle plus
/// action.json and particles.json; manifest.json at the root.
void save_dataset(const std::vector<Trajectory>& dataset, const DatasetConfig& config,
                  const std::vector<CameraView>& rig, const std::string& dir);

void save_action(const Action& action, const std::string& path);
Action load_action(const std::string& path);
void save_particles(const ParticleState& state, const std::string& path);
ParticleState load_particles(const std::string& path);

} // namespace gsmpc::sim
