#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsmpc/cli/commands.hpp"

using namespace gsmpc;

int main(int argc, char** argv) {
    CLI::App app{"Granular media manipulation with Gaussian splat dynamics"};
    app.allow_extras();

    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON config file");
    auto* seed_opt = app.add_option("--seed", seed, "global seed");
    auto* out_opt = app.add_option("--out", out, "output directory");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads");

    auto* gen = app.add_subcommand("gen-data", "generate a demonstration dataset");
    gen->allow_extras();

    std::string data_dir;
    auto* fit = app.add_subcommand("fit", "fit splat scenes for every dataset frame");
    fit->add_option("--data", data_dir, "dataset directory")->required();
    fit->allow_extras();

    std::string train_data, model_path, scene_path, target_path, plan_out;
    auto* train = app.add_subcommand("train", "train the dynamics model");
    train->add_option("--data", train_data, "fitted dataset directory")->required();
    train->allow_extras();

    auto* plan_cmd = app.add_subcommand("plan", "plan a push sequence");
    plan_cmd->add_option("--scene", scene_path, "current scene JSON")->required();
    plan_cmd->add_option("--target", target_path, "target scene JSON")->required();
    plan_cmd->add_option("--model", model_path, "dynamics checkpoint")->required();
    plan_cmd->add_option("--plan-out", plan_out, "output plan.json path");
    plan_cmd->allow_extras();

    std::string eval_task = "collecting";
    int eval_trials = 20;
    auto* eval = app.add_subcommand("eval", "run seeded MPC episodes and report metrics");
    eval->add_option("--task", eval_task, "collecting | splitting | redistributing");
    eval->add_option("--trials", eval_trials, "number of seeded episodes");
    eval->add_option("--model", model_path, "dynamics checkpoint")->required();
    eval->allow_extras();

    std::string camera_path, render_out;
    auto* render = app.add_subcommand("render", "render a scene file to PNG");
    render->add_option("--scene", scene_path, "scene JSON")->required();
    render->add_option("--camera", camera_path, "camera JSON")->required();
    render->add_option("--render-out", render_out, "output PNG path")->required();
    render->allow_extras();

    app.require_subcommand(1);
    for (CLI::App* sub : {gen, fit, train, plan_cmd, eval, render})
        sub->fallthrough();

    try {
        app.parse(argc, argv);

        cli::RunConfig config = cli::load_config(config_path);
        if (seed_opt->count())
            config.seed = seed;
        if (out_opt->count())
            config.out = out;
        if (threads_opt->count())
            config.threads = threads;

        std::vector<std::string> overrides = app.remaining();
        for (CLI::App* sub : {gen, fit, train, plan_cmd, eval, render}) {
            const auto extra = sub->remaining();
            overrides.insert(overrides.end(), extra.begin(), extra.end());
        }
        cli::apply_overrides(config, overrides);

        if (gen->parsed()) {
            cli::cmd_gen_data(config, config.out);
        } else if (fit->parsed()) {
            cli::cmd_fit(config, data_dir);
        } else if (train->parsed()) {
            cli::cmd_train(config, train_data, config.out);
        } else if (plan_cmd->parsed()) {
            cli::cmd_plan(config, scene_path, target_path, model_path,
                          plan_out.empty() ? "plan.json" : plan_out);
        } else if (eval->parsed()) {
            cli::cmd_eval(config, eval_task, eval_trials, model_path, config.out);
        } else if (render->parsed()) {
            cli::cmd_render(config, scene_path, camera_path, render_out);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
