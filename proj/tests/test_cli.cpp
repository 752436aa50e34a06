#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gsmpc/cli/commands.hpp"
#include "test_support.hpp"

using namespace gsmpc;
using namespace gsmpc::cli;

namespace fs = std::filesystem;

TEST_CASE("config defaults track the documented values") {
    const RunConfig config;
    CHECK(config.sim.n_particles == 50);
    CHECK(config.sim.n_cameras == 8);
    CHECK(config.fit.lr == 0.001);
    CHECK(config.fit.epochs == 2000);
    CHECK(config.fit.beta == 0.25);
    CHECK(config.train.lr == 0.001);
    CHECK(config.train.hidden == 256);
    CHECK(config.train.gamma == 2);
    CHECK(config.train.omega == 0.1);
    CHECK(config.plan.horizon == 3);
    CHECK(config.plan.samples == 16);
    CHECK(config.plan.grad_steps == 10);
    CHECK(config.plan.max_mpc_iters == 30);
}

TEST_CASE("config parsing applies sections and rejects unknown keys") {
    const RunConfig config = config_from_json_text(R"({
        "seed": 7,
        "sim": {"n_particles": 12, "image_size": 48},
        "train": {"hidden": 64, "gamma": 1}
    })");
    CHECK(config.seed == 7);
    CHECK(config.sim.n_particles == 12);
    CHECK(config.sim.image_size == 48);
    CHECK(config.train.hidden == 64);
    CHECK(config.train.gamma == 1);
    CHECK(config.sim.n_cameras == 8);  // untouched default

    CHECK_THROWS_AS(config_from_json_text(R"({"simulator": {}})"), ParseError);
    CHECK_THROWS_AS(config_from_json_text(R"({"sim": {"particles": 3}})"), ParseError);
    CHECK_THROWS_AS(config_from_json_text(R"({"sim": {"n_particles": "many"}})"), ParseError);
}

TEST_CASE("dotted overrides update nested keys") {
    RunConfig config;
    apply_overrides(config, {"--sim.n_particles=20", "--plan.samples=4",
                             "--train.match=position", "--fit.crop_to_workspace=false",
                             "--seed=99"});
    CHECK(config.sim.n_particles == 20);
    CHECK(config.plan.samples == 4);
    CHECK(config.train.match == "position");
    CHECK(config.fit.crop_to_workspace == false);
    CHECK(config.seed == 99);

    CHECK_THROWS_AS(apply_overrides(config, {"--sim.bogus=1"}), ParseError);
    CHECK_THROWS_AS(apply_overrides(config, {"--sim.n_particles"}), ParseError);
}

TEST_CASE("eval task construction covers all three kinds") {
    RunConfig config;
    config.sim.n_particles = 10;

    const auto collecting = make_eval_task(config, "collecting");
    CHECK(collecting.kind == sim::TaskKind::Collecting);
    REQUIRE(collecting.regions.size() == 1);
    CHECK(collecting.regions[0].radius == config.sim.target_radius);

    const auto splitting = make_eval_task(config, "splitting");
    CHECK(splitting.regions.size() == 2);

    const auto redistributing = make_eval_task(config, "redistributing");
    int total = 0;
    for (int c : redistributing.grid.target_counts)
        total += c;
    CHECK(total == 10);

    CHECK_THROWS_AS(make_eval_task(config, "flying"), ParseError);

    // Target arrangements satisfy their own task.
    for (const char* kind : {"collecting", "splitting", "redistributing"}) {
        const auto task = make_eval_task(config, kind);
        const auto target = make_target_state(config, task);
        CHECK(static_cast<int>(target.positions.size()) == 10);
        CHECK(sim::success(target, task));
    }
}

namespace {

/// Path of the CLI binary under test, from ctest's environment.
std::string cli_path() {
    const char* env = std::getenv("GSMPC_CLI");
    return env ? env : "";
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

} // namespace

TEST_CASE("cli pipeline smoke test" * doctest::skip(false)) {
    if (cli_path().empty()) {
        MESSAGE("GSMPC_CLI not set; skipping binary smoke test");
        return;
    }
    const std::string dir = test::scratch_dir("cli_smoke");
    const std::string data = dir + "/data";

    // Tiny profile so the whole chain runs in seconds.
    const std::string overrides =
        " --sim.n_particles=4 --sim.n_traj=1 --sim.steps_per_traj=1 --sim.n_cameras=2"
        " --sim.image_size=32 --fit.epochs=15 --train.hidden=8 --train.epochs=3"
        " --plan.samples=2 --plan.grad_steps=1 --plan.query_grid=8";

    REQUIRE(run_cli("gen-data --seed 5 --out " + data + overrides) == 0);
    CHECK(fs::exists(data + "/manifest.json"));
    CHECK(fs::exists(data + "/traj_0000/step_000/view_00.png"));
    CHECK(fs::exists(data + "/traj_0000/step_000/action.json"));
    CHECK(fs::exists(data + "/traj_0000/step_001/particles.json"));

    REQUIRE(run_cli("fit --seed 5 --data " + data + overrides) == 0);
    CHECK(fs::exists(data + "/traj_0000/step_000/scene.json"));
    CHECK(fs::exists(data + "/recon_losses.csv"));
    {
        std::ifstream csv(data + "/recon_losses.csv");
        std::string line;
        int rows = -1;  // header
        while (std::getline(csv, line))
            ++rows;
        CHECK(rows == 2);  // two frames
    }

    const std::string run = dir + "/run";
    REQUIRE(run_cli("train --seed 5 --data " + data + " --out " + run + overrides) == 0);
    CHECK(fs::exists(run + "/model.ckpt"));
    CHECK(fs::exists(run + "/train_loss.csv"));

    REQUIRE(run_cli("plan --seed 5 --scene " + data + "/traj_0000/step_000/scene.json" +
                    " --target " + data + "/traj_0000/step_001/scene.json" + " --model " + run +
                    "/model.ckpt --plan-out " + dir + "/plan.json" + overrides) == 0);
    CHECK(fs::exists(dir + "/plan.json"));

    REQUIRE(run_cli("render --scene " + data + "/traj_0000/step_000/scene.json" + " --camera " +
                    data + "/traj_0000/step_000/camera_00.json" + " --render-out " + dir +
                    "/render.png" + overrides) == 0);
    CHECK(fs::exists(dir + "/render.png"));

    // Errors surface as nonzero exit codes.
    CHECK(run_cli("fit --data " + dir + "/nonexistent" + overrides) != 0);
    CHECK(run_cli("gen-data --out " + dir + "/bad --sim.bogus_key=1") != 0);
}

TEST_CASE("cli reruns are reproducible" * doctest::skip(false)) {
    if (cli_path().empty()) {
        MESSAGE("GSMPC_CLI not set; skipping binary determinism test");
        return;
    }
    const std::string dir = test::scratch_dir("cli_repro");
    const std::string overrides =
        " --sim.n_particles=3 --sim.n_traj=1 --sim.steps_per_traj=1 --sim.n_cameras=1"
        " --sim.image_size=24";

    REQUIRE(run_cli("gen-data --seed 9 --out " + dir + "/a" + overrides) == 0);
    REQUIRE(run_cli("gen-data --seed 9 --out " + dir + "/b" + overrides) == 0);

    for (const char* rel :
         {"manifest.json", "traj_0000/step_000/view_00.png", "traj_0000/step_000/depth_00.bin",
          "traj_0000/step_000/action.json", "traj_0000/step_001/particles.json"}) {
        std::ifstream fa(dir + "/a/" + rel, std::ios::binary);
        std::ifstream fb(dir + "/b/" + rel, std::ios::binary);
        REQUIRE(fa.good());
        REQUIRE(fb.good());
        const std::string a((std::istreambuf_iterator<char>(fa)),
                            std::istreambuf_iterator<char>());
        const std::string b((std::istreambuf_iterator<char>(fb)),
                            std::istreambuf_iterator<char>());
        CHECK(a == b);
    }
}
