#include "gsmpc/cli/commands.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>

#include <json.hpp>

#include "gsmpc/dyn/train.hpp"
#include "gsmpc/io/image_io.hpp"
#include "gsmpc/plan/mpc.hpp"
#include "gsmpc/splat/render.hpp"
#include "gsmpc/splat/scene_io.hpp"

namespace gsmpc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_manifest(const std::string& dataset_dir) {
    std::ifstream in(fs::path(dataset_dir) / "manifest.json");
    if (!in)
        throw MissingFrames("no manifest.json in " + dataset_dir);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    return j;
}

std::vector<fs::path> sorted_subdirs(const fs::path& dir, const std::string& prefix) {
    std::vector<fs::path> out;
    if (!fs::exists(dir))
        return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && entry.path().filename().string().rfind(prefix, 0) == 0)
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<sim::TaskKind> parse_task_mix(const std::string& task) {
    if (task == "collecting")
        return {sim::TaskKind::Collecting};
    if (task == "splitting")
        return {sim::TaskKind::Splitting};
    if (task == "redistributing")
        return {sim::TaskKind::Redistributing};
    if (task == "mix")
        return {sim::TaskKind::Collecting, sim::TaskKind::Splitting, sim::TaskKind::Redistributing};
    throw ParseError("unknown task: " + task);
}

} // namespace

void cmd_gen_data(const RunConfig& config, const std::string& out_dir) {
    sim::DatasetConfig dc;
    dc.n_traj = config.sim.n_traj;
    dc.steps_per_traj = config.sim.steps_per_traj;
    dc.n_particles = config.sim.n_particles;
    dc.particle_radius = config.sim.particle_radius;
    dc.workspace = config.sim.workspace();
    dc.step_params = config.sim.step_params();
    dc.task_mix = parse_task_mix(config.sim.task);
    dc.seed = config.seed;

    const auto rig = config.sim.make_rig();
    const auto dataset = sim::gen_dataset(dc, rig);
    sim::save_dataset(dataset, dc, rig, out_dir);
}

void cmd_fit(const RunConfig& config, const std::string& dataset_dir) {
    const json manifest = read_manifest(dataset_dir);
    const int n_particles = manifest.at("n_particles").get<int>();
    const double radius = manifest.at("particle_radius").get<double>();

    PerceptionConfig pc = config.perception();
    {
        Box3 ws;
        const json& w = manifest.at("workspace");
        ws.min = Vec3(w.at("min")[0], w.at("min")[1], w.at("min")[2]);
        ws.max = Vec3(w.at("max")[0], w.at("max")[1], w.at("max")[2]);
        pc.filter_box = default_filter_box(ws, radius);
    }

    const auto traj_dirs = sorted_subdirs(dataset_dir, "traj_");
    if (traj_dirs.empty())
        throw MissingFrames("no trajectories in " + dataset_dir);

    struct Row {
        std::string traj, step;
        double initial, final_loss;
    };
    std::vector<Row> rows;

    std::uint64_t frame_counter = 0;
    for (const fs::path& traj_dir : traj_dirs) {
        for (const fs::path& step_dir : sorted_subdirs(traj_dir, "step_")) {
            ++frame_counter;
            const fs::path scene_path = step_dir / "scene.json";
            const fs::path loss_path = step_dir / "fit_loss.json";
            if (!fs::exists(scene_path)) {
                const auto observations = scene_init::load_observations(step_dir.string());
                const PerceptionResult result =
                    perceive(observations, pc, n_particles, radius,
                             split_seed(config.seed, frame_counter));
                splat::save_scene(result.scene, scene_path.string());
                json loss;
                loss["initial_loss"] = result.initial_loss;
                loss["final_loss"] = result.final_loss;
                std::ofstream out(loss_path);
                out << loss.dump(2) << "\n";
            }
            Row row;
            row.traj = traj_dir.filename().string();
            row.step = step_dir.filename().string();
            row.initial = 0.0;
            row.final_loss = 0.0;
            if (fs::exists(loss_path)) {
                std::ifstream in(loss_path);
                json loss;
                in >> loss;
                row.initial = loss.value("initial_loss", 0.0);
                row.final_loss = loss.value("final_loss", 0.0);
            }
            rows.push_back(std::move(row));
        }
    }

    std::ofstream csv(fs::path(dataset_dir) / "recon_losses.csv");
    if (!csv)
        throw IoError("cannot write recon_losses.csv");
    csv << "traj,step,initial_loss,final_loss\n";
    for (const Row& r : rows)
        csv << r.traj << "," << r.step << "," << std::setprecision(17) << r.initial << ","
            << r.final_loss << "\n";
}

void cmd_train(const RunConfig& config, const std::string& dataset_dir,
               const std::string& out_dir) {
    std::vector<dyn::Transition> transitions;
    for (const fs::path& traj_dir : sorted_subdirs(dataset_dir, "traj_")) {
        const auto step_dirs = sorted_subdirs(traj_dir, "step_");
        for (std::size_t s = 0; s + 1 < step_dirs.size(); ++s) {
            const fs::path scene_a = step_dirs[s] / "scene.json";
            const fs::path scene_b = step_dirs[s + 1] / "scene.json";
            const fs::path action = step_dirs[s] / "action.json";
            if (!fs::exists(scene_a) || !fs::exists(scene_b) || !fs::exists(action))
                continue;
            dyn::Transition t;
            t.before = splat::load_scene(scene_a.string());
            t.action = sim::load_action(action.string());
            t.after = splat::load_scene(scene_b.string());
            if (!t.before.empty() && !t.after.empty())
                transitions.push_back(std::move(t));
        }
    }
    if (transitions.empty())
        throw EmptyDataset("no fitted transitions in " + dataset_dir + "; run fit first");

    dyn::DynamicsModel model =
        dyn::DynamicsModel::create(config.train.hidden, config.train.gamma, config.seed);
    const dyn::TrainResult result = dyn::train(model, transitions, config.train_config());

    fs::create_directories(out_dir);
    dyn::save_checkpoint(model, (fs::path(out_dir) / "model.ckpt").string());
    dyn::save_loss_curve(result.loss_curve, (fs::path(out_dir) / "train_loss.csv").string());
}

void cmd_plan(const RunConfig& config, const std::string& scene_path,
              const std::string& target_path, const std::string& model_path,
              const std::string& out_path) {
    const splat::SplatScene scene = splat::load_scene(scene_path);
    const splat::SplatScene target = splat::load_scene(target_path);
    const dyn::DynamicsModel model = dyn::load_checkpoint(model_path);
    const plan::PlanResult result = plan::plan(scene, target, model, config.plan_config(),
                                               config.seed);
    plan::save_plan(result, out_path);
}

sim::TaskSpec make_eval_task(const RunConfig& config, const std::string& kind) {
    const Box3 ws = config.sim.workspace();
    const Vec2 center(ws.center().x(), ws.center().y());
    const Vec3 extent = ws.extent();

    sim::TaskSpec task;
    if (kind == "collecting") {
        task.kind = sim::TaskKind::Collecting;
        task.regions.push_back({center, config.sim.target_radius});
    } else if (kind == "splitting") {
        task.kind = sim::TaskKind::Splitting;
        const double dx = 0.25 * extent.x();
        task.regions.push_back({center - Vec2(dx, 0.0), config.sim.target_radius});
        task.regions.push_back({center + Vec2(dx, 0.0), config.sim.target_radius});
    } else if (kind == "redistributing") {
        task.kind = sim::TaskKind::Redistributing;
        sim::DensityGrid grid;
        grid.cell = 2.5 * config.sim.target_radius;
        grid.nx = std::max(1, static_cast<int>(extent.x() / grid.cell));
        grid.ny = std::max(1, static_cast<int>(extent.y() / grid.cell));
        grid.origin = center - 0.5 * Vec2(grid.nx * grid.cell, grid.ny * grid.cell);
        grid.target_counts.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
        const int left = (grid.ny / 2) * grid.nx + grid.nx / 4;
        const int right = (grid.ny / 2) * grid.nx + (3 * grid.nx) / 4;
        grid.target_counts[left] = config.sim.n_particles / 2;
        grid.target_counts[right] = config.sim.n_particles - config.sim.n_particles / 2;
        task.grid = grid;
        task.tolerance = 0.4;
    } else {
        throw ParseError("unknown eval task: " + kind);
    }
    return task;
}

sim::ParticleState make_target_state(const RunConfig& config, const sim::TaskSpec& task) {
    const Box3 ws = config.sim.workspace();
    const double r = config.sim.particle_radius;
    const int n = config.sim.n_particles;

    if (task.kind == sim::TaskKind::Redistributing) {
        sim::ParticleState state;
        state.radius = r;
        state.workspace = ws;
        const sim::DensityGrid& g = task.grid;
        for (int y = 0; y < g.ny; ++y) {
            for (int x = 0; x < g.nx; ++x) {
                const int want = g.count_at(x, y);
                if (want <= 0)
                    continue;
                const Vec2 center = g.origin + Vec2((x + 0.5) * g.cell, (y + 0.5) * g.cell);
                const sim::ParticleState cell = sim::pack_particles_in_disk(
                    want, r, ws, sim::DiskRegion{center, 0.45 * g.cell});
                state.positions.insert(state.positions.end(), cell.positions.begin(),
                                       cell.positions.end());
            }
        }
        return state;
    }

    // Disks: particles split evenly over the regions.
    sim::ParticleState state;
    state.radius = r;
    state.workspace = ws;
    const int regions = static_cast<int>(task.regions.size());
    for (int k = 0; k < regions; ++k) {
        const int share = n / regions + (k < n % regions ? 1 : 0);
        const sim::ParticleState pack =
            sim::pack_particles_in_disk(share, r, ws, task.regions[k]);
        state.positions.insert(state.positions.end(), pack.positions.begin(),
                               pack.positions.end());
    }
    return state;
}

EvalReport cmd_eval(const RunConfig& config, const std::string& task_kind, int n_trials,
                    const std::string& model_path, const std::string& out_dir) {
    EvalReport report;
    report.task = task_kind;
    report.n_trials = n_trials;

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "trials.csv");
    csv << "trial,success,initial_chamfer,final_chamfer,iterations\n";

    if (n_trials > 0) {
        const dyn::DynamicsModel model = dyn::load_checkpoint(model_path);
        const sim::TaskSpec task = make_eval_task(config, task_kind);
        const sim::ParticleState target_state = make_target_state(config, task);
        const auto rig = config.sim.make_rig();

        // Fit the target pattern once; every trial plans against it.
        const auto target_obs = sim::observe(target_state, rig);
        const PerceptionConfig pc = config.perception(config.plan.mpc_fit_epochs);
        const auto target_fit = perceive(target_obs, pc, config.sim.n_particles,
                                         config.sim.particle_radius,
                                         split_seed(config.seed, 999999));

        plan::EpisodeConfig ec;
        ec.plan = config.plan_config();
        ec.perception = pc;
        ec.step_params = config.sim.step_params();
        ec.task = task;
        ec.target_particles = target_state;

        const int threads = std::max(1, config.threads);
        ec.plan.threads = threads > 1 ? 1 : ec.plan.threads;

        std::vector<plan::EpisodeLog> logs(n_trials);
        const auto run_trial = [&](int trial) {
            const sim::ParticleState start = sim::scatter_particles(
                config.sim.n_particles, config.sim.particle_radius, config.sim.workspace(),
                split_seed(config.seed, 10000 + static_cast<std::uint64_t>(trial)));
            logs[trial] = plan::mpc_execute(start, target_fit.scene, model, ec, rig,
                                            split_seed(config.seed, 20000 + trial));
        };

        if (threads == 1) {
            for (int trial = 0; trial < n_trials; ++trial)
                run_trial(trial);
        } else {
            std::vector<std::future<void>> futures;
            std::atomic<int> next{0};
            for (int t = 0; t < threads; ++t)
                futures.push_back(std::async(std::launch::async, [&] {
                    for (int trial = next.fetch_add(1); trial < n_trials;
                         trial = next.fetch_add(1))
                        run_trial(trial);
                }));
            for (auto& f : futures)
                f.get();
        }

        double successes = 0.0;
        double chamfer_sum = 0.0;
        for (int trial = 0; trial < n_trials; ++trial) {
            const plan::EpisodeLog& log = logs[trial];
            successes += log.success ? 1.0 : 0.0;
            chamfer_sum += log.final_chamfer;
            csv << trial << "," << (log.success ? 1 : 0) << "," << std::setprecision(17)
                << log.initial_chamfer << "," << log.final_chamfer << ","
                << log.iterations.size() << "\n";
        }
        report.success_rate = successes / n_trials;
        report.state_error = chamfer_sum / n_trials;
    }

    json j;
    j["task"] = report.task;
    j["success_rate"] = report.success_rate;
    j["state_error"] = report.state_error;
    j["n_trials"] = report.n_trials;
    std::ofstream out(fs::path(out_dir) / "report.json");
    if (!out)
        throw IoError("cannot write eval report");
    out << j.dump(2) << "\n";
    return report;
}

void cmd_render(const RunConfig& config, const std::string& scene_path,
                const std::string& camera_path, const std::string& out_path) {
    const splat::SplatScene scene = splat::load_scene(scene_path);
    const splat::CameraView view = splat::load_camera(camera_path);
    const sim::ObserveParams observe_defaults;
    (void)config;
    io::save_png(splat::render(scene, view, observe_defaults.background_color), out_path);
}

} // namespace gsmpc::cli
