#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "cmarl/common/error.hpp"
#include "cmarl/common/log.hpp"
#include "cmarl/envs/registry.hpp"
#include "cmarl/metrics/curves.hpp"
#include "cmarl/metrics/stability.hpp"
#include "cmarl/numerics/checkpoint.hpp"
#include "cmarl/runner/deterministic.hpp"
#include "cmarl/runner/parallel.hpp"

using namespace cmarl;
namespace fs = std::filesystem;

namespace {

void print_plan(const runner::RunConfig& c, bool deterministic)
{
    const auto env = envs::make_env(c.env);
    const auto spec = env->spec();
    const auto dims = valuefn::NetDims::from_spec(spec, c.hidden, c.mixer_hidden);
    const auto params = valuefn::make_params(dims);
    std::cout << runner::to_json(c).dump(2) << "\n\n";
    std::cout << "plan:\n"
              << "  mode: " << (deterministic ? "deterministic (single process, one logical clock)" : "parallel")
              << "\n  processes: " << (deterministic ? 1 : 1 + c.containers) << " per seed\n"
              << "  threads per container: " << c.actors_per_container + 4 << "\n"
              << "  total actors: " << c.containers * c.actors_per_container << "\n"
              << "  task: " << env->name() << " with " << spec.n_agents << " agents, " << spec.n_actions
              << " actions, horizon " << spec.episode_limit << "\n"
              << "  parameters per network: " << params.size() << "\n"
              << "  seeds: " << c.seeds.size() << ", step budget " << c.step_budget << " each";
    if (c.time_budget_s > 0.0) std::cout << ", time budget " << c.time_budget_s << " s";
    std::cout << "\n  output: " << c.output_dir << "/" << c.name << "/seed_<S>\n"
              << "  config hash: " << runner::config_hash(c) << "\n";
}

int train(const std::string& config_file, const std::string& preset, std::optional<std::uint64_t> seed,
          bool deterministic, bool dry_run)
{
    auto config = runner::load_run_config(config_file, preset);
    if (seed) {
        config.seeds = {*seed};
    }
    if (dry_run) {
        print_plan(config, deterministic);
        return 0;
    }
    int status = 0;
    for (const auto s : config.seeds) {
        const auto dir = runner::run_directory(config, s);
        if (deterministic) {
            runner::DeterministicRun run{config, s, dir};
            const auto summary = run.run();
            std::cout << "seed " << s << ": " << summary.env_steps << " steps, final mean return "
                      << summary.final_mean << (summary.solved ? " (target reached)" : "") << ", " << dir.string()
                      << "\n";
        } else {
            const auto result = runner::run_parallel(config, s, dir, fs::canonical("/proc/self/exe"));
            std::cout << "seed " << s << ": " << result.env_steps << " steps, final mean return "
                      << result.final_mean << ", exit " << result.exit_status << ", " << dir.string() << "\n";
            status = status == 0 ? result.exit_status : status;
        }
    }
    return status;
}

int resume(const fs::path& dir)
{
    const auto config = runner::read_run_config(dir);
    if (fs::exists(dir / "checkpoint.bin")) {
        auto run = runner::DeterministicRun::resume(dir);
        if (run->finished()) {
            std::cout << "run in " << dir.string() << " already finished at " << run->env_steps() << " steps\n";
            return 0;
        }
        const auto s = run->run();
        std::cout << "resumed to " << s.env_steps << " steps, final mean return " << s.final_mean << "\n";
        return 0;
    }
    const auto result = runner::resume_parallel(dir, fs::canonical("/proc/self/exe"));
    std::cout << "resumed to " << result.env_steps << " steps, final mean return " << result.final_mean << "\n";
    return result.exit_status;
}

int evaluate(const fs::path& checkpoint, std::size_t episodes, std::uint64_t seed)
{
    const auto dir = checkpoint.parent_path();
    const auto config = runner::read_run_config(dir.empty() ? fs::path(".") : dir);
    const auto env = envs::make_env(config.env);
    const auto dims = valuefn::NetDims::from_spec(env->spec(), config.hidden, config.mixer_hidden);
    const auto params = numerics::load_params(checkpoint);
    const auto stats = centralizer::evaluate_policy(*env, params, dims, episodes, seed);
    nlohmann::json j;
    j["episodes"] = episodes;
    j["mean"] = stats.mean;
    j["median"] = stats.median;
    j["returns"] = stats.returns;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int report(const fs::path& dir, const std::string& smoother_name)
{
    const auto smoother = metrics::parse_smoother(smoother_name);
    const auto rows = metrics::curve_report(dir, smoother);
    const auto md = metrics::report_markdown(rows, smoother);
    std::cout << md;
    if (fs::is_directory(dir)) {
        std::ofstream(dir / "report.md") << md;
        std::ofstream(dir / "report.csv") << metrics::report_csv(rows);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Containerized multi-agent Q-learning runner"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string verbosity = "info";
    app.add_option("--log", verbosity, "debug, info, warn, error or off");

    auto* train_cmd = app.add_subcommand("train", "run training for every configured seed");
    std::string config_file;
    std::string preset;
    std::uint64_t seed_value = 0;
    bool deterministic = false;
    bool dry_run = false;
    train_cmd->add_option("--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
    train_cmd->add_option("--preset", preset, "ablation preset from configs/presets");
    auto* seed_opt = train_cmd->add_option("--seed", seed_value, "run only this seed");
    train_cmd->add_flag("--deterministic", deterministic, "single process on one logical clock");
    train_cmd->add_flag("--dry-run", dry_run, "print the resolved config and resource plan, then exit");

    auto* report_cmd = app.add_subcommand("report", "summarize runs under a directory");
    std::string report_dir;
    std::string smoother = "ema";
    report_cmd->add_option("--dir", report_dir, "directory containing run outputs")->required();
    report_cmd->add_option("--smoother", smoother, "ema, dema, midpoint or kalman");

    auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of saved central parameters");
    std::string checkpoint;
    std::size_t episodes = 20;
    std::uint64_t eval_seed = 777;
    eval_cmd->add_option("--checkpoint", checkpoint, "central_params.bin inside a run directory")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--episodes", episodes, "number of episodes");
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

    auto* resume_cmd = app.add_subcommand("resume", "continue a run from its checkpoint");
    std::string resume_dir;
    resume_cmd->add_option("--dir", resume_dir, "run directory")->required()->check(CLI::ExistingDirectory);

    runner::WorkerArgs worker;
    auto* central_cmd = app.add_subcommand("centralizer", "internal: centralizer process");
    central_cmd->group("");
    central_cmd->add_option("--run-dir", worker.run_dir)->required();
    central_cmd->add_flag("--resume", worker.resume);
    auto* container_cmd = app.add_subcommand("container", "internal: container process");
    container_cmd->group("");
    container_cmd->add_option("--run-dir", worker.run_dir)->required();
    container_cmd->add_option("--id", worker.container_id)->required();
    container_cmd->add_option("--port", worker.port)->required();
    container_cmd->add_option("--incarnation", worker.incarnation);

    CLI11_PARSE(app, argc, argv);

    try {
        if (verbosity == "debug") set_log_level(LogLevel::debug);
        else if (verbosity == "warn") set_log_level(LogLevel::warn);
        else if (verbosity == "error") set_log_level(LogLevel::error);
        else if (verbosity == "off") set_log_level(LogLevel::off);

        if (*train_cmd) {
            return train(config_file, preset, seed_opt->count() ? std::optional(seed_value) : std::nullopt,
                         deterministic, dry_run);
        }
        if (*report_cmd) return report(report_dir, smoother);
        if (*eval_cmd) return evaluate(checkpoint, episodes, eval_seed);
        if (*resume_cmd) return resume(resume_dir);
        if (*central_cmd) return runner::centralizer_main(worker);
        if (*container_cmd) return runner::container_main(worker);
    } catch (const VersionMismatch& e) {
        std::cerr << "error: checkpoint version " << e.found() << " cannot be read by this build (expects "
                  << e.expected() << ")\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return 4;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
