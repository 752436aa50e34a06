#pragma once

#include <string>

#include "gsmpc/cli/config.hpp"

namespace gsmpc::cli {

/// Generate, roll out, and serialize a demonstration dataset.
void cmd_gen_data(const RunConfig& config, const std::string& out_dir);

/// Fit splat scenes for every frame of a dataset; resumable per frame.
void cmd_fit(const RunConfig& config, const std::string& dataset_dir);

/// Train the dynamics model on fitted consecutive frames.
void cmd_train(const RunConfig& config, const std::string& dataset_dir,
               const std::string& out_dir);

void cmd_plan(const RunConfig& config, const std::string& scene_path,
              const std::string& target_path, const std::string& model_path,
              const std::string& out_path);

struct EvalReport {
    std::string task;
    double success_rate = 0.0;
    double state_error = 0.0;
    int n_trials = 0;
};

EvalReport cmd_eval(const RunConfig& config, const std::string& task, int n_trials,
                    const std::string& model_path, const std::string& out_dir);

void cmd_render(const RunConfig& config, const std::string& scene_path,
                const std::string& camera_path, const std::string& out_path);

/// The eval task with deterministic target regions for the configured
/// workspace, plus a particle arrangement that realizes it.
sim::TaskSpec make_eval_task(const RunConfig& config, const std::string& kind);
sim::ParticleState make_target_state(const RunConfig& config, const sim::TaskSpec& task);

} // namespace gsmpc::cli
