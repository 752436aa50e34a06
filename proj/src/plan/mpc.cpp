#include "gsmpc/plan/mpc.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "gsmpc/io/image_io.hpp"
#include "gsmpc/splat/render.hpp"

namespace gsmpc::plan {

namespace fs = std::filesystem;

EpisodeLog mpc_execute(const sim::ParticleState& env_state, const SplatScene& target_scene,
                       const DynamicsModel& model, const EpisodeConfig& config,
                       const std::vector<sim::CameraView>& rig, std::uint64_t seed) {
    EpisodeLog log;
    sim::ParticleState state = env_state;

    const bool have_target = config.target_particles.has_value();
    if (have_target)
        log.initial_chamfer = sim::state_error(state, *config.target_particles);

    std::ofstream csv;
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        csv.open(fs::path(config.out_dir) / "episode.csv");
        csv << "iter,cost,chamfer,success\n";
    }

    for (int iter = 0; iter < config.plan.max_mpc_iters; ++iter) {
        if (sim::success(state, config.task))
            break;

        const auto observations = sim::observe(state, rig);
        const PerceptionResult perceived =
            perceive(observations, config.perception, static_cast<int>(state.positions.size()),
                     state.radius, split_seed(seed, 1000 + iter));

        const PlanResult planned = plan(perceived.scene, target_scene, model, config.plan,
                                        split_seed(seed, 2000 + iter));

        const sim::Action action = planned.best.front();
        state = sim::step(state, action, config.step_params);

        EpisodeIteration record;
        record.iter = iter;
        record.action = action;
        record.plan_cost = planned.costs[planned.k_opt];
        record.chamfer = have_target ? sim::state_error(state, *config.target_particles) : 0.0;
        record.success = sim::success(state, config.task);
        log.iterations.push_back(record);

        if (csv.is_open()) {
            csv << iter << "," << std::setprecision(17) << record.plan_cost << ","
                << record.chamfer << "," << (record.success ? 1 : 0) << "\n";
            char name[32];
            std::snprintf(name, sizeof(name), "iter_%03d.png", iter);
            io::save_png(splat::render(perceived.scene, rig.front(),
                                       config.perception.background),
                         (fs::path(config.out_dir) / name).string());
        }
    }

    log.final_state = state;
    log.success = sim::success(state, config.task);
    if (have_target)
        log.final_chamfer = sim::state_error(state, *config.target_particles);
    return log;
}

} // namespace gsmpc::plan
