#include "cmarl/runner/parallel.hpp"

#include <csignal>
#include <fstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "cmarl/centralizer/runtime.hpp"
#include "cmarl/common/error.hpp"
#include "cmarl/common/log.hpp"
#include "cmarl/container/runtime.hpp"
#include "cmarl/metrics/curves.hpp"
#include "cmarl/numerics/checkpoint.hpp"
#include "cmarl/runner/setup.hpp"

namespace cmarl::runner {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::atomic<bool> terminate_requested{false};

extern "C" void on_terminate(int) { terminate_requested = true; }

void install_terminate_handler()
{
    struct sigaction sa {};
    sa.sa_handler = on_terminate;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGTERM, &sa, nullptr);
    sigaction(SIGINT, &sa, nullptr);
}

const char* level_name(LogLevel level)
{
    switch (level) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    case LogLevel::off: return "off";
    }
    return "info";
}

void write_json_atomic(const fs::path& file, const nlohmann::json& j)
{
    const fs::path tmp = file.string() + ".tmp";
    std::ofstream(tmp) << j.dump(2) << '\n';
    fs::rename(tmp, file);
}

nlohmann::json read_json(const fs::path& file)
{
    std::ifstream in{file};
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw SchemaError(file.string() + " is not valid JSON");
    }
    return j;
}

fs::path port_file(const fs::path& dir) { return dir / "centralizer.port"; }
fs::path state_file(const fs::path& dir) { return dir / "central_state.bin"; }
fs::path container_summary_file(const fs::path& dir, std::uint32_t id)
{
    return dir / ("container_" + std::to_string(id) + "_summary.json");
}

struct MonitorState {
    bool finished = false;
    bool solved = false;
    double wall = 0.0;
    double next_eval_s = 0.0;
    std::uint64_t evals = 0;
    double last_mean = 0.0;
    double last_median = 0.0;
    std::uint64_t last_eval_steps = 0;
};

void save_state(const fs::path& dir, const RunConfig& config, std::uint64_t seed, const MonitorState& m,
                centralizer::CentralRuntime& runtime)
{
    numerics::ByteWriter w;
    w.str(to_json(config).dump());
    w.u64(seed);
    w.u8(m.finished ? 1 : 0);
    w.u8(m.solved ? 1 : 0);
    w.f64(m.wall);
    w.f64(m.next_eval_s);
    w.u64(m.evals);
    w.f64(m.last_mean);
    w.f64(m.last_median);
    w.u64(m.last_eval_steps);
    runtime.save(w);
    const fs::path tmp = state_file(dir).string() + ".tmp";
    numerics::write_sealed(tmp, numerics::FileKind::central_state, numerics::checkpoint_version, w.buffer());
    fs::rename(tmp, state_file(dir));
}

MonitorState load_state(const fs::path& dir, const RunConfig& config, std::uint64_t seed,
                        centralizer::CentralRuntime& runtime)
{
    const auto payload =
        numerics::read_sealed(state_file(dir), numerics::FileKind::central_state, numerics::checkpoint_version);
    numerics::ByteReader r{payload};
    if (r.str() != to_json(config).dump()) {
        throw IntegrityError(state_file(dir).string() + " was written for a different configuration");
    }
    if (r.u64() != seed) {
        throw IntegrityError(state_file(dir).string() + " was written for a different seed");
    }
    MonitorState m;
    m.finished = r.u8() != 0;
    m.solved = r.u8() != 0;
    m.wall = r.f64();
    m.next_eval_s = r.f64();
    m.evals = r.u64();
    m.last_mean = r.f64();
    m.last_median = r.f64();
    m.last_eval_steps = r.u64();
    runtime.load(r);
    if (!r.done()) {
        throw IntegrityError(state_file(dir).string() + ": trailing bytes after the central state");
    }
    return m;
}

}  // namespace

int centralizer_main(const WorkerArgs& args)
{
    const fs::path dir = args.run_dir;
    const RunConfig config = read_run_config(dir);
    const std::uint64_t seed = config.seeds.front();
    set_log_tag("centralizer");
    install_terminate_handler();

    centralizer::CentralRuntimeOptions options;
    options.broadcast_every_s = config.broadcast_interval_s;
    options.updates_per_batch = config.central_updates_per_tick;
    options.min_updates_per_s = config.central_min_updates_per_s;
    centralizer::CentralRuntime runtime{central_config(config, seed), options};

    MonitorState m;
    std::string marker;
    if (args.resume && fs::exists(state_file(dir))) {
        m = load_state(dir, config, seed, runtime);
        marker = "resumed at env_steps_total=" + std::to_string(runtime.total_env_steps());
    } else {
        fs::remove(dir / "metrics.csv");
    }
    if (m.finished) {
        log_info("run already finished");
        return 0;
    }
    metrics::MetricsWriter metrics{dir / "metrics.csv", marker};

    runtime.start();
    {
        const fs::path tmp = port_file(dir).string() + ".tmp";
        std::ofstream(tmp) << runtime.port() << '\n';
        fs::rename(tmp, port_file(dir));
    }
    log_info("listening on port " + std::to_string(runtime.port()));

    const auto started = Clock::now();
    const double wall_offset = m.wall;
    const auto elapsed = [&] { return wall_offset + std::chrono::duration<double>(Clock::now() - started).count(); };
    double next_checkpoint = elapsed() + config.checkpoint_every_s;
    bool link_was_down = false;

    const auto evaluate = [&] {
        const auto steps = runtime.total_env_steps();
        const auto stats = runtime.evaluate(config.eval.episodes, config.eval.seed);
        metrics::MetricsRow row;
        row.wall_clock_s = elapsed();
        row.env_steps_total = steps;
        row.eval_mean_return = stats.mean;
        row.eval_median_return = stats.median;
        row.td_loss = runtime.last_td();
        row.policy_divergence = runtime.policy_divergence();
        row.buffer_sizes.push_back(runtime.buffer_size());
        const auto reports = runtime.reports();
        for (std::uint32_t c = 0; c < config.containers; ++c) {
            const auto it = reports.find(c);
            const auto r = it == reports.end() ? centralizer::ContainerReport{} : it->second;
            row.kl_mean_per_container.push_back(r.kl_mean);
            row.buffer_sizes.push_back(r.buffer_size);
            row.dropped_episodes += r.dropped_episodes;
        }
        row.central_updates = runtime.updates();
        row.broadcast_version = runtime.broadcast_version();
        metrics.write(row);
        ++m.evals;
        m.last_mean = stats.mean;
        m.last_median = stats.median;
        m.last_eval_steps = steps;
        if (config.eval.stop_at_return && stats.mean >= *config.eval.stop_at_return - 1e-9) {
            m.solved = true;
        }
    };

    bool interrupted = false;
    while (true) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        const double now = elapsed();
        const bool down = config.fault.link_down_at_s >= 0.0 && now >= config.fault.link_down_at_s &&
                          now < config.fault.link_down_at_s + config.fault.link_down_for_s;
        if (down != link_was_down) {
            log_warn(down ? "fault injection: taking the link down" : "fault injection: bringing the link back");
            runtime.set_link_down(down);
            link_was_down = down;
        }
        if (now >= m.next_eval_s) {
            evaluate();
            while (m.next_eval_s <= now) {
                m.next_eval_s += config.eval.every_s;
            }
        }
        const auto steps = runtime.total_env_steps();
        if (m.solved || steps >= config.step_budget || (config.time_budget_s > 0.0 && now >= config.time_budget_s)) {
            break;
        }
        if (terminate_requested) {
            interrupted = true;
            break;
        }
        if (now >= next_checkpoint) {
            m.wall = elapsed();
            save_state(dir, config, seed, m, runtime);
            next_checkpoint = now + config.checkpoint_every_s;
        }
    }

    runtime.set_link_down(false);
    runtime.request_container_stop();
    const auto deadline = Clock::now() + std::chrono::seconds(10);
    while (runtime.connected() > 0 && Clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    runtime.stop();
    if (!interrupted) {
        if (m.last_eval_steps != runtime.total_env_steps() || m.evals == 0) {
            evaluate();
        }
        m.finished = true;
    }
    m.wall = elapsed();
    save_state(dir, config, seed, m, runtime);
    numerics::save_params(dir / "central_params.bin", runtime.online_params());

    auto summary = runtime.summary();
    summary["seed"] = seed;
    summary["mode"] = "parallel";
    summary["env_steps"] = runtime.total_env_steps();
    summary["wall_s"] = m.wall;
    summary["finished"] = m.finished;
    summary["solved"] = m.solved;
    summary["final_mean_return"] = m.last_mean;
    summary["final_median_return"] = m.last_median;
    summary["evaluations"] = m.evals;
    write_json_atomic(dir / "summary.json", summary);
    fs::remove(port_file(dir));
    log_info("finished at " + std::to_string(runtime.total_env_steps()) + " environment steps");
    return interrupted ? 130 : 0;
}

int container_main(const WorkerArgs& args)
{
    const fs::path dir = args.run_dir;
    const RunConfig config = read_run_config(dir);
    const std::uint64_t seed = config.seeds.front();
    if (args.container_id >= config.containers) {
        throw ConfigError("container id " + std::to_string(args.container_id) + " outside the configured " +
                          std::to_string(config.containers));
    }
    set_log_tag("container " + std::to_string(args.container_id));
    install_terminate_handler();

    auto cc = container_config(config, seed, args.container_id);
    if (args.incarnation > 0) {
        // A restarted container explores new episodes; its shared block is replaced by the first broadcast.
        cc.seed = numerics::derive_seed(seed, {0x1ca, args.incarnation});
    }
    container::RuntimeOptions options;
    options.incarnation = args.incarnation;
    options.port = args.port;
    options.head_upload_every_s = config.broadcast_interval_s;
    container::ContainerRuntime runtime{cc, options};
    const pid_t parent = getppid();
    runtime.start();
    while (!runtime.stop_requested() && !runtime.orphaned() && !terminate_requested && getppid() == parent) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    runtime.stop();

    const auto file = container_summary_file(dir, args.container_id);
    nlohmann::json all = fs::exists(file) ? read_json(file) : nlohmann::json::object();
    auto entry = runtime.summary();
    entry["stopped_by"] = runtime.stop_requested() ? "centralizer" : runtime.orphaned() ? "orphaned" : "signal";
    all["container_id"] = args.container_id;
    all["incarnations"].push_back(entry);
    write_json_atomic(file, all);
    return runtime.orphaned() ? 3 : 0;
}

namespace {

pid_t spawn(const fs::path& exe, const std::vector<std::string>& args)
{
    std::vector<char*> argv;
    std::string program = exe.string();
    argv.push_back(program.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);
    const pid_t pid = fork();
    if (pid < 0) {
        throw std::runtime_error("fork failed");
    }
    if (pid == 0) {
        execv(program.c_str(), argv.data());
        _exit(127);
    }
    return pid;
}

std::uint16_t wait_for_port(const fs::path& dir, pid_t central)
{
    const auto deadline = Clock::now() + std::chrono::seconds(60);
    while (Clock::now() < deadline) {
        if (fs::exists(port_file(dir))) {
            std::ifstream in{port_file(dir)};
            int port = 0;
            if (in >> port && port > 0) {
                return static_cast<std::uint16_t>(port);
            }
        }
        int status = 0;
        if (waitpid(central, &status, WNOHANG) == central) {
            return 0;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    throw std::runtime_error("centralizer did not publish its port within 60 s");
}

ParallelResult supervise(const fs::path& dir, const RunConfig& config, const fs::path& exe, bool resume)
{
    const std::string level = level_name(log_level());
    std::vector<std::uint32_t> incarnation(config.containers, 0);
    const fs::path supervisor_file = dir / "supervisor.json";
    if (resume && fs::exists(supervisor_file)) {
        const auto j = read_json(supervisor_file);
        const auto next = j.at("next_incarnation").get<std::vector<std::uint32_t>>();
        for (std::size_t c = 0; c < incarnation.size() && c < next.size(); ++c) {
            incarnation[c] = next[c];
        }
    }
    fs::remove(port_file(dir));

    std::vector<std::string> central_args{"--log", level, "centralizer", "--run-dir", dir.string()};
    if (resume) {
        central_args.push_back("--resume");
    }
    const pid_t central = spawn(exe, central_args);
    const std::uint16_t port = wait_for_port(dir, central);

    ParallelResult result;
    std::map<pid_t, std::uint32_t> running;
    std::vector<std::uint32_t> restarts(config.containers, 0);
    const auto launch = [&](std::uint32_t c) {
        const pid_t pid = spawn(exe, {"--log", level, "container", "--run-dir", dir.string(), "--id", std::to_string(c),
                                      "--port", std::to_string(port), "--incarnation", std::to_string(incarnation[c])});
        running[pid] = c;
        ++incarnation[c];
        write_json_atomic(supervisor_file, nlohmann::json{{"next_incarnation", incarnation}});
    };
    int central_status = 0;
    bool central_done = port == 0;
    if (central_done) {
        waitpid(central, &central_status, 0);
    } else {
        for (std::uint32_t c = 0; c < config.containers; ++c) {
            launch(c);
        }
    }

    while (!central_done) {
        int status = 0;
        const pid_t pid = waitpid(-1, &status, 0);
        if (pid < 0) {
            break;
        }
        if (pid == central) {
            central_status = status;
            central_done = true;
            break;
        }
        const auto it = running.find(pid);
        if (it == running.end()) {
            continue;
        }
        const auto c = it->second;
        running.erase(it);
        const bool clean = WIFEXITED(status) && WEXITSTATUS(status) == 0;
        if (clean) {
            continue;
        }
        if (restarts[c] < config.max_restarts) {
            ++restarts[c];
            ++result.restarts;
            log_warn("container " + std::to_string(c) + " died; restart " + std::to_string(restarts[c]) + " of " +
                     std::to_string(config.max_restarts));
            launch(c);
        } else {
            log_error("container " + std::to_string(c) + " died and has no restarts left");
        }
    }

    const auto deadline = Clock::now() + std::chrono::seconds(15);
    while (!running.empty()) {
        int status = 0;
        const pid_t pid = waitpid(-1, &status, WNOHANG);
        if (pid > 0) {
            running.erase(pid);
            continue;
        }
        if (Clock::now() > deadline) {
            for (const auto& [p, c] : running) {
                kill(p, SIGTERM);
            }
            for (const auto& [p, c] : running) {
                waitpid(p, &status, 0);
            }
            running.clear();
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }

    result.exit_status = WIFEXITED(central_status) ? WEXITSTATUS(central_status) : 128 + WTERMSIG(central_status);
    if (fs::exists(dir / "summary.json")) {
        auto summary = read_json(dir / "summary.json");
        result.env_steps = summary.value("env_steps", std::uint64_t{0});
        result.final_mean = summary.value("final_mean_return", 0.0);
        summary["restarts"] = summary.value("restarts", 0u) + result.restarts;
        write_json_atomic(dir / "summary.json", summary);
    }
    return result;
}

}  // namespace

ParallelResult run_parallel(const RunConfig& config_in, std::uint64_t seed, const fs::path& run_dir,
                            const fs::path& exe)
{
    RunConfig config = config_in;
    config.seeds = {seed};
    validate(config);
    prepare_run_directory(run_dir, config, seed);
    for (const char* stale : {"metrics.csv", "summary.json", "central_state.bin", "central_params.bin",
                              "supervisor.json", "checkpoint.bin"}) {
        fs::remove(run_dir / stale);
    }
    for (std::uint32_t c = 0; c < config.containers; ++c) {
        fs::remove(container_summary_file(run_dir, c));
    }
    return supervise(run_dir, config, exe, false);
}

ParallelResult resume_parallel(const fs::path& run_dir, const fs::path& exe)
{
    const RunConfig config = read_run_config(run_dir);
    if (!fs::exists(state_file(run_dir))) {
        throw ConfigError("no central_state.bin in " + run_dir.string());
    }
    return supervise(run_dir, config, exe, true);
}

}  // namespace cmarl::runner
