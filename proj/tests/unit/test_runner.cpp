#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cmarl/common/error.hpp"
#include "cmarl/numerics/checkpoint.hpp"
#include "cmarl/runner/config.hpp"
#include "cmarl/runner/deterministic.hpp"

using namespace cmarl;
using namespace cmarl::runner;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig small_climb()
{
    RunConfig c = parse_run_config(json{{"env", {{"name", "climb"}, {"n_agents", 2}}}});
    c.containers = 2;
    c.actors_per_container = 2;
    c.hidden = 8;
    c.mixer_hidden = 4;
    c.batch_size = 4;
    c.min_buffer = 4;
    c.step_budget = 200;
    c.broadcast_every_ticks = 3;
    c.eval.episodes = 1;
    c.eval.every_steps = 40;
    c.target_update_interval = 5;
    return c;
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("cmarl_runner_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing rejects bad input with a useful message")
{
    const auto d = parse_run_config(json::object());
    CHECK(d.containers == 3);
    CHECK(d.actors_per_container == 4);
    CHECK(d.epsilon.anneal_steps == 50000);
    CHECK(d.target_update_interval == 200);
    CHECK(d.eta_percent == 50.0);

    CHECK_THROWS_WITH_AS(parse_run_config(json{{"contianers", 2}}), doctest::Contains("contianers"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config(json{{"eval", {{"episodez", 2}}}}), doctest::Contains("eval"),
                         ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"eta_percent", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"seeds", json::array()}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"containers", "three"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"env", {{"name", "pong"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"epsilon", {{"start", 1.5}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"priority", {{"return_low", 1.0}}}}), ConfigError);

    const auto back = parse_run_config(to_json(small_climb()));
    CHECK(to_json(back) == to_json(small_climb()));
    CHECK(config_hash(back) == config_hash(small_climb()));
    RunConfig other = small_climb();
    other.beta = 0.2;
    CHECK(config_hash(other) != config_hash(small_climb()));
}

TEST_CASE("every ablation has exactly one preset file")
{
    const auto names = preset_names();
    for (const char* n : {"cmarl", "no_diversity", "2_containers", "1_container", "8_actors", "2_actors"}) {
        CHECK(std::count(names.begin(), names.end(), n) == 1);
    }
    const auto nd = load_run_config({}, "no_diversity");
    CHECK(nd.no_diversity);
    CHECK(nd.beta == 0.0);
    CHECK(learner_config(nd).loss.beta == 0.0);
    const auto one = load_run_config({}, "1_container");
    CHECK(one.containers == 1);
    CHECK(load_run_config({}, "2_containers").containers == 2);
    CHECK(load_run_config({}, "2_actors").actors_per_container <
          load_run_config({}, "8_actors").actors_per_container);
    CHECK_THROWS_WITH_AS(load_run_config({}, "turbo"), doctest::Contains("no_diversity"), ConfigError);

    const json overlay = apply_overlay(json{{"env", {{"name", "climb"}, {"n_agents", 3}}}, {"beta", 0.3}},
                                       json{{"env", {{"n_agents", 5}}}});
    CHECK(overlay["env"]["name"] == "climb");
    CHECK(overlay["env"]["n_agents"] == 5);
    CHECK(overlay["beta"] == 0.3);
}

TEST_CASE("zero budget starts and stops cleanly")
{
    RunConfig c = small_climb();
    c.step_budget = 0;
    DeterministicRun run{c, 1};
    CHECK(run.finished());
    const auto s = run.run();
    CHECK(s.env_steps == 0);
    CHECK(run.central().learner().learner().updates() == 0);
    for (auto& box : run.containers()) CHECK(box->learner_steps() == 0);
}

TEST_CASE("a deterministic run repeats exactly")
{
    DeterministicRun a{small_climb(), 3};
    DeterministicRun b{small_climb(), 3};
    const auto sa = a.run();
    const auto sb = b.run();
    CHECK(sa.finished);
    CHECK(sa.env_steps >= 200);
    CHECK(a.central().learner().learner().updates() > 0);
    CHECK(a.central().learner().broadcast_version() > 0);
    CHECK(a.central().learner().learner().online() == b.central().learner().learner().online());
    for (std::size_t k = 0; k < a.containers().size(); ++k) {
        CHECK(a.containers()[k]->learner().learner().online() == b.containers()[k]->learner().learner().online());
        // Shared block equals the last broadcast.
        CHECK(a.containers()[k]->learner().weights_version() == a.central().learner().broadcast_version());
    }
    REQUIRE(sa.evals.size() == sb.evals.size());
    for (std::size_t k = 0; k < sa.evals.size(); ++k) CHECK(sa.evals[k].mean == sb.evals[k].mean);

    DeterministicRun c{small_climb(), 4};
    c.run();
    CHECK_FALSE(c.central().learner().learner().online() == a.central().learner().learner().online());
}

TEST_CASE("resuming from a checkpoint matches the uninterrupted run")
{
    const auto dir = scratch("resume");
    RunConfig c = small_climb();
    c.output_dir = dir.string();

    DeterministicRun whole{c, 5};
    whole.run();

    {
        DeterministicRun first{c, 5, run_directory(c, 5)};
        first.run(7);
        CHECK_FALSE(first.finished());
    }
    auto resumed = DeterministicRun::resume(run_directory(c, 5));
    CHECK(resumed->ticks() == 7);
    const auto s = resumed->run();
    CHECK(s.finished);
    CHECK(resumed->ticks() == whole.ticks());
    CHECK(resumed->central().learner().learner().online() == whole.central().learner().learner().online());
    CHECK(resumed->central().learner().learner().target() == whole.central().learner().learner().target());
    for (std::size_t k = 0; k < whole.containers().size(); ++k) {
        CHECK(resumed->containers()[k]->learner().learner().online() ==
              whole.containers()[k]->learner().learner().online());
    }
    std::ifstream csv(run_directory(c, 5) / "metrics.csv");
    std::string text((std::istreambuf_iterator<char>(csv)), {});
    CHECK(text.find("# resumed at env_steps_total=") != std::string::npos);

    // Resuming a finished run exits at once.
    auto again = DeterministicRun::resume(run_directory(c, 5));
    CHECK(again->finished());
    const auto ticks = again->ticks();
    again->run();
    CHECK(again->ticks() == ticks);

    // A damaged checkpoint is refused before anything is loaded.
    const auto file = run_directory(c, 5) / "checkpoint.bin";
    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(200);
        f.put('\x5a');
    }
    CHECK_THROWS_AS(DeterministicRun::resume(run_directory(c, 5)), IntegrityError);
    fs::remove_all(dir);
}
