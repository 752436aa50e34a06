#include "gsmpc/plan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <random>

#include <json.hpp>

#include "gsmpc/dyn/graph.hpp"

namespace gsmpc::plan {

using sim::Action;

std::vector<Vec3> make_query_grid(const Box3& workspace, int n, double z) {
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(n) * n);
    const Vec3 extent = workspace.extent();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            points.emplace_back(workspace.min.x() + extent.x() * (i + 0.5) / n,
                                workspace.min.y() + extent.y() * (j + 0.5) / n, z);
    return points;
}

double cost(const SplatScene& current, const SplatScene& target, const std::vector<Vec3>& query) {
    if (query.empty())
        throw EmptyQuerySet("cost needs at least one query point");
    const splat::DensityCache cur = splat::build_density_cache(current);
    const splat::DensityCache tgt = splat::build_density_cache(target);
    double total = 0.0;
    for (const Vec3& x : query) {
        const double diff = splat::density_from_cache(cur, x) - splat::density_from_cache(tgt, x);
        total += diff * diff;
    }
    return total / query.size();
}

namespace {

struct RolloutTape {
    std::vector<SplatScene> scenes;           // T+1
    std::vector<dyn::ForwardCache> caches;    // T
    std::vector<dyn::Deltas> deltas;          // T
    std::vector<dyn::SceneGraph> graphs;      // T
};

double eval_cost(const DynamicsModel& model, const SplatScene& scene,
                 const std::vector<double>& target_density, const std::vector<Vec3>& query,
                 const std::vector<Action>& actions, const PlanConfig& config,
                 RolloutTape* tape) {
    const SplatScene* current = &scene;
    RolloutTape local;
    RolloutTape& t = tape ? *tape : local;
    t.scenes.clear();
    t.caches.clear();
    t.deltas.clear();
    t.graphs.clear();
    // Forward caches keep pointers into `graphs`; no reallocation allowed.
    t.scenes.reserve(actions.size() + 1);
    t.caches.reserve(actions.size());
    t.deltas.reserve(actions.size());
    t.graphs.reserve(actions.size());
    t.scenes.push_back(scene);
    for (const Action& action : actions) {
        t.graphs.push_back(dyn::build_graph(*current, config.omega));
        t.caches.emplace_back();
        t.deltas.push_back(
            dyn::forward(model, t.graphs.back(), action, tape ? &t.caches.back() : nullptr));
        t.scenes.push_back(dyn::apply(*current, t.deltas.back()));
        current = &t.scenes.back();
    }

    const splat::DensityCache cur = splat::build_density_cache(*current);
    double total = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const double diff = splat::density_from_cache(cur, query[i]) - target_density[i];
        total += diff * diff;
    }
    return total / query.size();
}

/// d(cost)/d(actions) through the rollout, topology held fixed per step.
std::vector<Eigen::Vector4d> cost_action_gradient(const DynamicsModel& model,
                                                  const RolloutTape& tape,
                                                  const std::vector<double>& target_density,
                                                  const std::vector<Vec3>& query) {
    const SplatScene& final_scene = tape.scenes.back();
    splat::SceneGrad d_scene = splat::zero_grad(final_scene);
    const splat::DensityCache cur = splat::build_density_cache(final_scene);
    for (std::size_t i = 0; i < query.size(); ++i) {
        const double diff = splat::density_from_cache(cur, query[i]) - target_density[i];
        splat::density_backward(cur, query[i], 2.0 * diff / query.size(), d_scene);
    }

    const std::size_t horizon = tape.deltas.size();
    std::vector<Eigen::Vector4d> d_actions(horizon, Eigen::Vector4d::Zero());
    for (std::size_t t = horizon; t-- > 0;) {
        const SplatScene& before = tape.scenes[t];
        const dyn::ApplyGrads apply_grads = dyn::apply_backward(before, tape.deltas[t], d_scene);
        const dyn::ForwardGrads fwd_grads = dyn::forward_backward(
            model, tape.caches[t], apply_grads.d_delta_g, apply_grads.d_delta_r);
        d_actions[t] = fwd_grads.d_action;

        d_scene = apply_grads.d_scene;
        for (std::size_t i = 0; i < before.size(); ++i)
            dyn::node_features_backward(before.splats[i], fwd_grads.d_features.row(i), d_scene[i]);
    }
    return d_actions;
}

Action project_action(Action action, const PlanConfig& config) {
    const auto clamp_xy = [&](const Vec2& p) {
        return Vec2(std::clamp(p.x(), config.workspace.min.x(), config.workspace.max.x()),
                    std::clamp(p.y(), config.workspace.min.y(), config.workspace.max.y()));
    };
    action.start = clamp_xy(action.start);
    action.end = clamp_xy(action.end);
    Vec2 seg = action.end - action.start;
    double len = seg.norm();
    if (len >= config.min_push && len <= config.max_push)
        return action;  // already valid; keep it bit-exact
    if (len < 1e-9) {
        seg = Vec2(1.0, 0.0);
        len = 0.0;
    } else {
        seg /= len;
    }
    const double clamped = std::clamp(len, config.min_push, config.max_push);
    action.end = clamp_xy(action.start + seg * clamped);
    if ((action.end - action.start).norm() < config.min_push) {
        // The clamp ran into a wall; try the opposite direction.
        action.end = clamp_xy(action.start - seg * clamped);
    }
    return action;
}

std::vector<Action> sample_candidate(const SplatScene& scene, const PlanConfig& config,
                                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(config.workspace.min.x(), config.workspace.max.x());
    std::uniform_real_distribution<double> uy(config.workspace.min.y(), config.workspace.max.y());
    std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> ulen(config.min_push, config.max_push);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Action> actions;
    actions.reserve(config.horizon);
    for (int t = 0; t < config.horizon; ++t) {
        Action action;
        for (int tries = 0; tries < 100; ++tries) {
            Vec2 start;
            if (config.biased_sampling && !scene.empty()) {
                const std::size_t pick =
                    std::uniform_int_distribution<std::size_t>(0, scene.size() - 1)(rng);
                const Vec3& g = scene.splats[pick].position;
                start = Vec2(g.x() + 0.04 * gauss(rng), g.y() + 0.04 * gauss(rng));
            } else {
                start = Vec2(ux(rng), uy(rng));
            }
            const double angle = uang(rng);
            const double len = ulen(rng);
            action.start = start;
            action.end = start + Vec2(len * std::cos(angle), len * std::sin(angle));
            action = project_action(action, config);
            const double got = action.length();
            if (got >= config.min_push - 1e-12 && got <= config.max_push + 1e-12)
                break;
            if (tries == 99)
                throw NoValidActions("could not sample a valid action in the workspace");
        }
        actions.push_back(action);
    }
    return actions;
}

struct CandidateOutcome {
    std::vector<Action> actions;
    double final_cost = 0.0;
    double initial_cost = 0.0;
    std::vector<double> history;
};

CandidateOutcome refine_candidate(const SplatScene& scene, const DynamicsModel& model,
                                  const std::vector<double>& target_density,
                                  const std::vector<Vec3>& query, const PlanConfig& config,
                                  std::vector<Action> actions) {
    CandidateOutcome out;
    RolloutTape tape;
    double current_cost = eval_cost(model, scene, target_density, query, actions, config, &tape);
    out.initial_cost = current_cost;
    out.history.push_back(current_cost);

    for (int iter = 0; iter < config.grad_steps; ++iter) {
        const auto d_actions = cost_action_gradient(model, tape, target_density, query);

        double lr = config.action_lr;
        bool accepted = false;
        for (int bt = 0; bt <= config.max_backtracks; ++bt) {
            std::vector<Action> proposal = actions;
            for (std::size_t t = 0; t < proposal.size(); ++t) {
                proposal[t].start -= lr * d_actions[t].head<2>();
                proposal[t].end -= lr * d_actions[t].tail<2>();
                proposal[t] = project_action(proposal[t], config);
            }
            RolloutTape trial_tape;
            const double trial_cost =
                eval_cost(model, scene, target_density, query, proposal, config, &trial_tape);
            if (trial_cost <= current_cost) {
                actions = std::move(proposal);
                current_cost = trial_cost;
                tape = std::move(trial_tape);
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        (void)accepted;  // on failure the previous actions are kept
        out.history.push_back(current_cost);
    }
    out.actions = std::move(actions);
    out.final_cost = current_cost;
    return out;
}

} // namespace

PlanResult plan(const SplatScene& scene, const SplatScene& target, const DynamicsModel& model,
                const PlanConfig& config, std::uint64_t seed) {
    if (scene.empty() || target.empty())
        throw EmptyScene("plan needs non-empty current and target scenes");

    const std::vector<Vec3> query =
        make_query_grid(config.workspace, config.query_grid, config.query_z);
    if (query.empty())
        throw EmptyQuerySet("plan needs a non-empty query grid");

    const splat::DensityCache tgt = splat::build_density_cache(target);
    std::vector<double> target_density(query.size());
    for (std::size_t i = 0; i < query.size(); ++i)
        target_density[i] = splat::density_from_cache(tgt, query[i]);

    // Candidates are seeded independently so refinement order cannot matter.
    std::vector<std::vector<Action>> candidates(config.samples);
    for (int k = 0; k < config.samples; ++k) {
        std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(k)));
        candidates[k] = sample_candidate(scene, config, rng);
    }

    std::vector<CandidateOutcome> outcomes(config.samples);
    const auto refine_range = [&](int begin, int end) {
        for (int k = begin; k < end; ++k)
            outcomes[k] =
                refine_candidate(scene, model, target_density, query, config, candidates[k]);
    };
    const int n_threads = std::max(1, std::min(config.threads, config.samples));
    if (n_threads == 1) {
        refine_range(0, config.samples);
    } else {
        std::vector<std::future<void>> futures;
        const int chunk = (config.samples + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(config.samples, begin + chunk);
            if (begin < end)
                futures.push_back(std::async(std::launch::async, refine_range, begin, end));
        }
        for (auto& f : futures)
            f.get();
    }

    PlanResult result;
    result.seed = seed;
    result.costs.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        result.costs.push_back(o.final_cost);
        result.initial_costs.push_back(o.initial_cost);
        result.cost_history.push_back(o.history);
    }
    result.k_opt = static_cast<int>(
        std::min_element(result.costs.begin(), result.costs.end()) - result.costs.begin());
    result.best = outcomes[result.k_opt].actions;
    return result;
}

void save_plan(const PlanResult& result, const std::string& path) {
    nlohmann::json j;
    nlohmann::json actions = nlohmann::json::array();
    for (const Action& a : result.best)
        actions.push_back({a.start.x(), a.start.y(), a.end.x(), a.end.y()});
    j["actions"] = std::move(actions);
    j["costs"] = result.costs;
    j["k_opt"] = result.k_opt;
    j["seed"] = result.seed;
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

} // namespace gsmpc::plan
