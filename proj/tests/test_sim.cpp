#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "gsmpc/sim/dataset.hpp"
#include "gsmpc/sim/sim.hpp"
#include "test_support.hpp"

using namespace gsmpc;
using namespace gsmpc::sim;

namespace {

const Box3 kWorkspace{Vec3(-0.2, -0.2, 0.0), Vec3(0.2, 0.2, 0.05)};
constexpr double kRadius = 0.005;

ParticleState state_with(std::initializer_list<Vec2> positions) {
    ParticleState state;
    state.radius = kRadius;
    state.workspace = kWorkspace;
    for (const Vec2& p : positions)
        state.positions.emplace_back(p.x(), p.y(), kRadius);
    return state;
}

double min_separation(const ParticleState& state) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.positions.size(); ++i)
        for (std::size_t j = i + 1; j < state.positions.size(); ++j)
            best = std::min(best, (state.positions[i] - state.positions[j]).norm());
    return best;
}

} // namespace

TEST_CASE("a push far from every particle changes nothing") {
    const auto state = state_with({{0.1, 0.1}, {0.12, 0.1}, {0.1, 0.13}});
    const Action push{Vec2(-0.15, -0.15), Vec2(-0.05, -0.15)};
    const auto next = step(state, push, StepParams{});
    REQUIRE(next.positions.size() == state.positions.size());
    for (std::size_t i = 0; i < state.positions.size(); ++i)
        CHECK((next.positions[i] - state.positions[i]).norm() == 0.0);
}

TEST_CASE("a particle on the push line ends one radius past the final face") {
    const auto state = state_with({{0.05, 0.0}});
    const Action push{Vec2(-0.05, 0.0), Vec2(0.1, 0.0)};
    const auto next = step(state, push, StepParams{});
    CHECK(next.positions[0].x() == doctest::Approx(0.1 + kRadius).epsilon(1e-9));
    CHECK(next.positions[0].y() == doctest::Approx(0.0));
}

TEST_CASE("two touching particles pushed head-on both advance and stay apart") {
    const auto state = state_with({{0.05, 0.0}, {0.05 + 2 * kRadius, 0.0}});
    const Action push{Vec2(-0.05, 0.0), Vec2(0.08, 0.0)};
    const auto next = step(state, push, StepParams{});
    CHECK(next.positions[0].x() > state.positions[0].x());
    CHECK(next.positions[1].x() > state.positions[1].x());
    CHECK(min_separation(next) >= 2 * kRadius - kContactTolerance);
}

TEST_CASE("step conserves particles, keeps separation and containment") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-0.15, 0.15);
    std::uniform_real_distribution<double> len(0.03, 0.18);
    std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);

    ParticleState state = scatter_particles(20, kRadius, kWorkspace, 123);
    for (int trial = 0; trial < 25; ++trial) {
        Action push;
        push.start = Vec2(coord(rng), coord(rng));
        const double a = ang(rng);
        push.end = push.start + len(rng) * Vec2(std::cos(a), std::sin(a));
        push.end.x() = std::clamp(push.end.x(), -0.19, 0.19);
        push.end.y() = std::clamp(push.end.y(), -0.19, 0.19);
        if (push.length() < 0.02)
            continue;
        state = step(state, push, StepParams{});
        CHECK(state.positions.size() == 20);
        CHECK(min_separation(state) >= 2 * kRadius - kContactTolerance);
        for (const Vec3& p : state.positions) {
            CHECK(p.x() >= kWorkspace.min.x() - 1e-12);
            CHECK(p.x() <= kWorkspace.max.x() + 1e-12);
            CHECK(p.y() >= kWorkspace.min.y() - 1e-12);
            CHECK(p.y() <= kWorkspace.max.y() + 1e-12);
        }
    }
}

TEST_CASE("a lone particle moves only if the dilated sweep reaches it") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> coord(-0.18, 0.18);
    const StepParams params;

    for (int trial = 0; trial < 200; ++trial) {
        const auto state = state_with({{coord(rng), coord(rng)}});
        Action push;
        push.start = Vec2(coord(rng), coord(rng));
        Vec2 end(coord(rng), coord(rng));
        Vec2 seg = end - push.start;
        const double raw = seg.norm();
        if (raw < 1e-6)
            continue;
        seg *= std::clamp(raw, params.min_push, params.max_push) / raw;
        push.end = push.start + seg;
        if (std::abs(push.end.x()) > 0.2 || std::abs(push.end.y()) > 0.2)
            continue;

        const auto next = step(state, push, params);
        const bool moved = (next.positions[0] - state.positions[0]).norm() > 1e-12;

        // Distance from the particle to the swept rectangle (the pusher
        // segment translated from start to end), minus its dilation.
        const Vec2 p(state.positions[0].x(), state.positions[0].y());
        const Vec2 dir = seg / seg.norm();
        const Vec2 side(-dir.y(), dir.x());
        const double along = (p - push.start).dot(dir);
        const double lateral = std::abs((p - push.start).dot(side));
        const double hl = 0.5 * params.pusher_len;
        const double dx = std::max({-along, 0.0, along - seg.norm()});
        const double dy = std::max(lateral - hl, 0.0);
        const double dist = std::hypot(dx, dy);

        if (dist > state.radius + 1e-9)
            CHECK(!moved);
        if (dist < state.radius - 1e-9)
            CHECK(moved);
    }
}

TEST_CASE("step validates its action") {
    const auto state = state_with({{0.0, 0.0}});
    CHECK_THROWS_AS(step(state, Action{Vec2(0, 0), Vec2(0.005, 0)}, StepParams{}), InvalidAction);
    CHECK_THROWS_AS(step(state, Action{Vec2(0, 0), Vec2(0.5, 0)}, StepParams{}), InvalidAction);
    CHECK_THROWS_AS(step(state, Action{Vec2(-0.5, 0), Vec2(0, 0)}, StepParams{}), InvalidAction);
}

TEST_CASE("observe renders the background when there are no particles") {
    ParticleState empty;
    empty.radius = kRadius;
    empty.workspace = kWorkspace;
    const auto rig = make_rig(2, 0.55, 45.0, Vec3::Zero(), 24, 24, 55.0);
    const ObserveParams params;
    const auto obs = observe(empty, rig, params);
    REQUIRE(obs.size() == 2);
    for (const auto& o : obs)
        for (const Vec3& c : o.image.rgb)
            CHECK(c.isApprox(params.background_color, 1e-12));
}

TEST_CASE("a particle seen top-down covers the expected pixel diameter") {
    // Top-down camera one meter above the particle plane; the projected disk
    // is centered on a pixel corner so the lit-pixel count equals the ceiling
    // of the projected diameter.
    ParticleState state;
    state.radius = kRadius;
    state.workspace = kWorkspace;
    state.positions.emplace_back(0.0, 0.0, kRadius);

    splat::CameraView view;
    view.width = view.height = 64;
    view.cx = 32.0;  // pixel corner, not a pixel center
    view.cy = 32.0;
    const double depth = 1.0;
    view.fx = view.fy = 720.0;
    view.rotation << 1, 0, 0,
        0, -1, 0,
        0, 0, -1;  // looking straight down, x preserved
    const Vec3 eye(0.0, 0.0, depth + kRadius);
    view.translation = -view.rotation * eye;

    const auto obs = observe(state, {view});
    const ObserveParams params;

    const double projected_diameter = 2.0 * kRadius * view.fx / depth;  // 7.2 px
    int lit_in_row = 0;
    for (int x = 0; x < 64; ++x)
        if (obs[0].image.at(x, 32).isApprox(params.particle_color, 1e-12) ||
            obs[0].image.at(x, 31).isApprox(params.particle_color, 1e-12))
            ++lit_in_row;
    // Rows 31 and 32 are both half a pixel off the disk equator; count unique
    // columns touched on either side of it.
    CHECK(lit_in_row == static_cast<int>(std::ceil(projected_diameter)));

    // Depth at particle pixels is the camera-frame distance to the particle plane.
    bool found = false;
    for (std::size_t i = 0; i < obs[0].image.rgb.size(); ++i) {
        if (obs[0].image.rgb[i].isApprox(params.particle_color, 1e-12)) {
            CHECK((*obs[0].image.depth)[i] == doctest::Approx(depth).epsilon(1e-9));
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("particle pixels differ from the background in every view") {
    const auto state = scatter_particles(10, kRadius, kWorkspace, 3);
    const auto rig = make_rig(4, 0.55, 45.0, Vec3::Zero(), 48, 48, 55.0);
    const ObserveParams params;
    for (const auto& o : observe(state, rig, params)) {
        int particle_pixels = 0;
        for (const Vec3& c : o.image.rgb)
            if (c.isApprox(params.particle_color, 1e-12)) {
                ++particle_pixels;
                CHECK(!c.isApprox(params.background_color, 1e-12));
            }
        CHECK(particle_pixels > 0);
    }
}

TEST_CASE("oracle pushes the stray particle straight at the target") {
    auto state = state_with({{-0.1, 0.05}});
    TaskSpec task;
    task.kind = TaskKind::Collecting;
    task.regions.push_back({Vec2(0.1, 0.05), 0.03});

    OracleParams no_noise;
    no_noise.noise_pos = 0.0;
    no_noise.noise_angle = 0.0;
    std::mt19937_64 rng(1);
    const Action a = oracle_policy(state, task, rng, StepParams{}, no_noise);

    const Vec2 dir = (a.end - a.start).normalized();
    CHECK(dir.x() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dir.y() == doctest::Approx(0.0));
    // Start behind the particle, end toward the region.
    CHECK(a.start.x() < -0.1);
    CHECK(a.end.x() > -0.1);
}

TEST_CASE("oracle raises AlreadySolved and is deterministic under a fixed seed") {
    TaskSpec task;
    task.kind = TaskKind::Collecting;
    task.regions.push_back({Vec2(0.0, 0.0), 0.05});

    auto solved = state_with({{0.01, 0.0}, {0.0, 0.02}});
    std::mt19937_64 rng(2);
    CHECK_THROWS_AS(oracle_policy(solved, task, rng, StepParams{}), AlreadySolved);

    auto state = state_with({{-0.15, 0.1}, {0.1, -0.12}});
    std::mt19937_64 rng_a(7), rng_b(7);
    const Action a = oracle_policy(state, task, rng_a, StepParams{});
    const Action b = oracle_policy(state, task, rng_b, StepParams{});
    CHECK(a.start == b.start);
    CHECK(a.end == b.end);
}

TEST_CASE("success covers disks, emptiness, and monotone insertion") {
    TaskSpec task;
    task.kind = TaskKind::Collecting;
    task.regions.push_back({Vec2(0.0, 0.0), 0.05});

    CHECK(success(state_with({{0.01, 0.0}, {-0.02, 0.03}}), task));
    CHECK(!success(state_with({{0.01, 0.0}, {0.15, 0.0}}), task));
    CHECK(success(state_with({}), task));  // vacuous

    // Moving an outside particle strictly inside never breaks success.
    auto outside = state_with({{0.01, 0.0}, {0.15, 0.0}});
    auto moved = outside;
    moved.positions[1] = Vec3(0.02, 0.01, kRadius);
    CHECK(!success(outside, task));
    CHECK(success(moved, task));
}

TEST_CASE("success on a density grid respects the count tolerance") {
    TaskSpec task;
    task.kind = TaskKind::Redistributing;
    task.grid.origin = Vec2(-0.1, -0.1);
    task.grid.cell = 0.1;
    task.grid.nx = task.grid.ny = 2;
    task.grid.target_counts = {2, 0, 0, 2};
    task.tolerance = 0.5;  // within 50% of the target count

    auto exact = state_with({{-0.05, -0.05}, {-0.06, -0.04}, {0.05, 0.05}, {0.04, 0.06}});
    CHECK(success(exact, task));

    auto uneven = state_with({{-0.05, -0.05}, {0.05, 0.05}, {0.04, 0.06}});
    CHECK(success(uneven, task));  // 1 vs 2 is within 50%

    auto wrong_cell = state_with({{-0.05, 0.05}, {-0.04, 0.06}});
    CHECK(!success(wrong_cell, task));
}

TEST_CASE("state_error is the symmetric averaged squared chamfer") {
    const auto a = state_with({{0.0, 0.0}});
    auto b = state_with({{0.03, 0.04}});  // distance 0.05
    CHECK(state_error(a, a) == doctest::Approx(0.0));
    CHECK(state_error(a, b) == doctest::Approx(2 * 0.05 * 0.05).epsilon(1e-12));

    const auto many = scatter_particles(8, kRadius, kWorkspace, 17);
    auto shuffled = many;
    std::mt19937_64 rng(4);
    std::shuffle(shuffled.positions.begin(), shuffled.positions.end(), rng);
    CHECK(state_error(many, shuffled) == doctest::Approx(0.0));

    ParticleState empty;
    empty.workspace = kWorkspace;
    CHECK_THROWS_AS(state_error(empty, a), EmptySet);
}

TEST_CASE("gen_dataset is reproducible and honors step counts") {
    DatasetConfig config;
    config.n_traj = 2;
    config.steps_per_traj = 3;
    config.n_particles = 6;
    config.seed = 11;
    const auto rig = make_rig(2, 0.55, 45.0, Vec3::Zero(), 24, 24, 55.0);

    const auto a = gen_dataset(config, rig);
    const auto b = gen_dataset(config, rig);
    REQUIRE(a.size() == 2);
    for (std::size_t t = 0; t < a.size(); ++t) {
        REQUIRE(a[t].steps.size() == 4);
        CHECK(a[t].steps.back().action == std::nullopt);
        for (std::size_t s = 0; s < a[t].steps.size(); ++s) {
            REQUIRE(b[t].steps[s].particles.positions.size() ==
                    a[t].steps[s].particles.positions.size());
            for (std::size_t i = 0; i < a[t].steps[s].particles.positions.size(); ++i)
                CHECK(a[t].steps[s].particles.positions[i] ==
                      b[t].steps[s].particles.positions[i]);
            for (std::size_t v = 0; v < a[t].steps[s].observations.size(); ++v)
                for (std::size_t p = 0; p < a[t].steps[s].observations[v].image.rgb.size(); ++p)
                    CHECK(a[t].steps[s].observations[v].image.rgb[p] ==
                          b[t].steps[s].observations[v].image.rgb[p]);
        }
    }

    DatasetConfig no_steps = config;
    no_steps.steps_per_traj = 0;
    const auto c = gen_dataset(no_steps, rig);
    CHECK(c[0].steps.size() == 1);
    CHECK(c[0].steps[0].action == std::nullopt);
}

TEST_CASE("dataset serialization round trips actions and particles") {
    const std::string dir = test::scratch_dir("dataset_io");
    const Action action{Vec2(0.01, -0.02), Vec2(0.1, 0.05)};
    save_action(action, dir + "/action.json");
    const Action loaded = load_action(dir + "/action.json");
    CHECK(loaded.start == action.start);
    CHECK(loaded.end == action.end);

    const auto state = scatter_particles(5, kRadius, kWorkspace, 23);
    save_particles(state, dir + "/particles.json");
    const auto back = load_particles(dir + "/particles.json");
    REQUIRE(back.positions.size() == state.positions.size());
    for (std::size_t i = 0; i < back.positions.size(); ++i)
        CHECK(back.positions[i].isApprox(state.positions[i], 1e-12));
    CHECK(back.radius == state.radius);
}
