#pragma once

#include <cstdint>
#include <string>

#include "gsmpc/dyn/dynamics.hpp"
#include "gsmpc/splat/density.hpp"

namespace gsmpc::plan {

using dyn::DynamicsModel;
using splat::SplatScene;

struct PlanConfig {
    int horizon = 3;         // T
    int samples = 16;        // K
    int grad_steps = 10;     // N
    double action_lr = 0.01;
    int query_grid = 32;     // query points per side, at query_z
    double query_z = 0.005;
    int max_mpc_iters = 30;
    double omega = dyn::kDefaultOmega;
    Box3 workspace;
    double min_push = 0.02;
    double max_push = 0.20;
    bool biased_sampling = false;  // start candidate pushes near a random splat
    int max_backtracks = 5;
    int threads = 1;
};

/// Regular n x n grid over the workspace footprint at height z.
std::vector<Vec3> make_query_grid(const Box3& workspace, int n, double z);

/// (1/|P|) sum_x |d_current(x) - d_target(x)|^2.
double cost(const SplatScene& current, const SplatScene& target, const std::vector<Vec3>& query);

struct PlanResult {
    std::vector<sim::Action> best;        // u_{0:T-1}
    std::vector<double> costs;            // final c^k per candidate
    std::vector<double> initial_costs;    // pre-refinement c^k
    std::vector<std::vector<double>> cost_history;  // per candidate, per iteration
    int k_opt = 0;
    std::uint64_t seed = 0;
};

/// Sample K seeded action sequences, refine each by N projected gradient
/// steps through the dynamics rollout (backtracking on cost increase), and
/// return the argmin candidate.
PlanResult plan(const SplatScene& scene, const SplatScene& target, const DynamicsModel& model,
                const PlanConfig& config, std::uint64_t seed);

/// {"actions": [[xs,ys,xe,ye], ...], "costs": [...], "k_opt": int, "seed": int}
void save_plan(const PlanResult& result, const std::string& path);

} // namespace gsmpc::plan
