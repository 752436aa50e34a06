#include "gsmpc/sim/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace gsmpc::sim {

namespace fs = std::filesystem;
using nlohmann::json;

TaskSpec sample_task(TaskKind kind, const Box3& workspace, double particle_radius, int n_particles,
                     std::mt19937_64& rng) {
    (void)particle_radius;
    TaskSpec task;
    task.kind = kind;
    const Vec3 extent = workspace.extent();
    const double inner = 0.25;  // keep region centers away from the walls
    std::uniform_real_distribution<double> ux(workspace.min.x() + inner * extent.x(),
                                              workspace.max.x() - inner * extent.x());
    std::uniform_real_distribution<double> uy(workspace.min.y() + inner * extent.y(),
                                              workspace.max.y() - inner * extent.y());
    std::uniform_real_distribution<double> ur(0.05, 0.08);

    switch (kind) {
    case TaskKind::Collecting:
        task.regions.push_back({Vec2(ux(rng), uy(rng)), ur(rng)});
        break;
    case TaskKind::Splitting: {
        const DiskRegion a{Vec2(ux(rng), uy(rng)), ur(rng)};
        DiskRegion b{Vec2(ux(rng), uy(rng)), ur(rng)};
        // Keep the two regions apart so the split is meaningful.
        for (int tries = 0; tries < 32 && (b.center - a.center).norm() < a.radius + b.radius;
             ++tries)
            b.center = Vec2(ux(rng), uy(rng));
        task.regions.push_back(a);
        task.regions.push_back(b);
        break;
    }
    case TaskKind::Redistributing: {
        DensityGrid grid;
        grid.cell = 0.08;
        grid.nx = static_cast<int>(extent.x() / grid.cell);
        grid.ny = static_cast<int>(extent.y() / grid.cell);
        grid.origin = Vec2(workspace.center().x() - 0.5 * grid.nx * grid.cell,
                           workspace.center().y() - 0.5 * grid.ny * grid.cell);
        grid.target_counts.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
        // Spread the particle budget over a few random cells.
        std::uniform_int_distribution<int> cx(0, grid.nx - 1), cy(0, grid.ny - 1);
        const int n_cells = 3;
        int remaining = n_particles;
        for (int c = 0; c < n_cells; ++c) {
            const int share = (c == n_cells - 1) ? remaining : n_particles / n_cells;
            grid.target_counts[static_cast<std::size_t>(cy(rng)) * grid.nx + cx(rng)] += share;
            remaining -= share;
        }
        task.grid = grid;
        task.tolerance = 0.4;
        break;
    }
    }
    return task;
}

std::vector<Trajectory> gen_dataset(const DatasetConfig& config,
                                    const std::vector<CameraView>& rig) {
    if (config.n_traj < 1 || config.steps_per_traj < 0)
        throw InvalidArgument("gen_dataset needs n_traj >= 1 and steps_per_traj >= 0");

    std::vector<Trajectory> dataset;
    dataset.reserve(config.n_traj);

    for (int t = 0; t < config.n_traj; ++t) {
        std::mt19937_64 rng(split_seed(config.seed, static_cast<std::uint64_t>(t)));
        Trajectory traj;
        const TaskKind kind = config.task_mix[t % config.task_mix.size()];
        traj.task = sample_task(kind, config.workspace, config.particle_radius,
                                config.n_particles, rng);

        ParticleState state = scatter_particles(config.n_particles, config.particle_radius,
                                                config.workspace, rng());

        for (int s = 0; s < config.steps_per_traj; ++s) {
            TrajectoryStep step_record;
            step_record.particles = state;
            step_record.observations = observe(state, rig, config.observe_params);

            // Re-target when the demonstrator has nothing left to do.
            for (int tries = 0; tries < 20 && success(state, traj.task); ++tries)
                traj.task = sample_task(kind, config.workspace, config.particle_radius,
                                        config.n_particles, rng);
            Action action;
            if (success(state, traj.task)) {
                // Every sampled task is satisfied; fall back to a random push.
                std::uniform_real_distribution<double> ux(config.workspace.min.x() + 1e-3,
                                                          config.workspace.max.x() - 1e-3);
                std::uniform_real_distribution<double> uy(config.workspace.min.y() + 1e-3,
                                                          config.workspace.max.y() - 1e-3);
                std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI);
                std::uniform_real_distribution<double> ulen(config.step_params.min_push,
                                                            config.step_params.max_push);
                for (int tries = 0; tries < 100; ++tries) {
                    action.start = Vec2(ux(rng), uy(rng));
                    const double a = uang(rng);
                    action.end = action.start + ulen(rng) * Vec2(std::cos(a), std::sin(a));
                    try {
                        validate_action(action, config.workspace, config.step_params);
                        break;
                    } catch (const InvalidAction&) {
                        continue;
                    }
                }
            } else {
                action = oracle_policy(state, traj.task, rng, config.step_params,
                                       config.oracle_params);
            }
            step_record.action = action;
            traj.steps.push_back(std::move(step_record));
            state = step(state, action, config.step_params);
        }

        TrajectoryStep final_record;
        final_record.particles = state;
        final_record.observations = observe(state, rig, config.observe_params);
        traj.steps.push_back(std::move(final_record));
        dataset.push_back(std::move(traj));
    }
    return dataset;
}

void save_action(const Action& action, const std::string& path) {
    json j;
    j["start"] = {action.start.x(), action.start.y()};
    j["end"] = {action.end.x(), action.end.y()};
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

Action load_action(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
        Action a;
        a.start = Vec2(j.at("start")[0].get<double>(), j.at("start")[1].get<double>());
        a.end = Vec2(j.at("end")[0].get<double>(), j.at("end")[1].get<double>());
        return a;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_particles(const ParticleState& state, const std::string& path) {
    json j;
    j["radius"] = state.radius;
    j["workspace"] = {{"min", {state.workspace.min.x(), state.workspace.min.y(),
                               state.workspace.min.z()}},
                      {"max", {state.workspace.max.x(), state.workspace.max.y(),
                               state.workspace.max.z()}}};
    json positions = json::array();
    for (const Vec3& p : state.positions)
        positions.push_back({p.x(), p.y(), p.z()});
    j["positions"] = std::move(positions);
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

ParticleState load_particles(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
        ParticleState state;
        state.radius = j.at("radius").get<double>();
        const json& w = j.at("workspace");
        state.workspace.min = Vec3(w.at("min")[0], w.at("min")[1], w.at("min")[2]);
        state.workspace.max = Vec3(w.at("max")[0], w.at("max")[1], w.at("max")[2]);
        for (const json& p : j.at("positions"))
            state.positions.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                         p[2].get<double>());
        return state;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_dataset(const std::vector<Trajectory>& dataset, const DatasetConfig& config,
                  const std::vector<CameraView>& rig, const std::string& dir) {
    fs::create_directories(dir);
    char name[32];
    for (std::size_t t = 0; t < dataset.size(); ++t) {
        std::snprintf(name, sizeof(name), "traj_%04zu", t);
        const fs::path traj_dir = fs::path(dir) / name;
        for (std::size_t s = 0; s < dataset[t].steps.size(); ++s) {
            std::snprintf(name, sizeof(name), "step_%03zu", s);
            const fs::path step_dir = traj_dir / name;
            const TrajectoryStep& record = dataset[t].steps[s];
            scene_init::save_observations(record.observations, step_dir.string());
            save_particles(record.particles, (step_dir / "particles.json").string());
            if (record.action)
                save_action(*record.action, (step_dir / "action.json").string());
        }
    }
    json manifest;
    manifest["n_traj"] = dataset.size();
    manifest["steps_per_traj"] = config.steps_per_traj;
    manifest["n_particles"] = config.n_particles;
    manifest["particle_radius"] = config.particle_radius;
    manifest["n_cameras"] = rig.size();
    manifest["seed"] = config.seed;
    manifest["workspace"] = {{"min", {config.workspace.min.x(), config.workspace.min.y(),
                                      config.workspace.min.z()}},
                             {"max", {config.workspace.max.x(), config.workspace.max.y(),
                                      config.workspace.max.z()}}};
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out)
        throw IoError("cannot write dataset manifest");
    out << manifest.dump(2) << "\n";
}

} // namespace gsmpc::sim
