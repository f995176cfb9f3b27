#include "cmarl/runner/deterministic.hpp"

#include <fstream>

#include "cmarl/common/error.hpp"
#include "cmarl/common/log.hpp"
#include "cmarl/numerics/checkpoint.hpp"

namespace cmarl::runner {

namespace fs = std::filesystem;

namespace {

// Every message crosses the same byte codec the network link uses.
net::Message over_wire(const net::Message& m)
{
    const auto frame = net::encode(m);
    return net::decode(std::span<const std::uint8_t>(frame).subspan(4));
}

template <typename T>
T over_wire_as(const T& m)
{
    return std::get<T>(over_wire(net::Message{m}));
}

}  // namespace

DeterministicRun::DeterministicRun(RunConfig config, std::uint64_t seed, std::optional<fs::path> run_dir)
    : config_{std::move(config)}, seed_{seed}, run_dir_{std::move(run_dir)}, started_{std::chrono::steady_clock::now()}
{
    config_.seeds = {seed_};
    validate(config_);
    central_ = std::make_unique<centralizer::CentralCore>(central_config(config_, seed_));
    for (std::uint32_t c = 0; c < config_.containers; ++c) {
        containers_.push_back(std::make_unique<container::ContainerCore>(container_config(config_, seed_, c)));
    }
    batch_counters_.assign(config_.containers, 0);
    next_eval_ = config_.eval.every_steps;
    if (run_dir_) {
        prepare_run_directory(*run_dir_, config_, seed_);
        fs::remove(*run_dir_ / "metrics.csv");
        metrics_ = std::make_unique<metrics::MetricsWriter>(*run_dir_ / "metrics.csv");
    }
    finished_ = config_.step_budget == 0;
}

std::uint64_t DeterministicRun::env_steps() const
{
    std::uint64_t total = 0;
    for (const auto& c : containers_) {
        total += c->env_steps();
    }
    return total;
}

double DeterministicRun::elapsed() const
{
    return wall_offset_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

void DeterministicRun::tick()
{
    if (finished_) {
        return;
    }
    for (auto& c : containers_) {
        c->run_actors();
    }
    std::size_t batches = 0;
    for (std::size_t k = 0; k < containers_.size(); ++k) {
        auto& c = *containers_[k];
        auto exchange = c.exchange();
        if (exchange.transfer.empty()) {
            continue;
        }
        net::TrajBatch batch;
        batch.container_id = c.config().container_id;
        batch.batch_seq = net::make_batch_seq(0, ++batch_counters_[k]);
        batch.trajectories = std::move(exchange.transfer);
        const auto ack = over_wire_as(central_->receive(over_wire_as(batch)));
        if (ack.batch_seq != batch.batch_seq || ack.container_id != batch.container_id) {
            throw IntegrityError("acknowledgement does not match the batch sent");
        }
        ++acked_;
        ++batches;
    }
    for (auto& c : containers_) {
        c->train(config_.container_updates_per_tick);
    }
    central_->exchange();
    central_->train(static_cast<std::size_t>(config_.central_updates_per_tick) * batches);
    ++ticks_;
    if (ticks_ % config_.broadcast_every_ticks == 0) {
        broadcast();
    }

    const auto steps = env_steps();
    if (steps >= next_eval_) {
        evaluate();
        while (next_eval_ <= steps) {
            next_eval_ += config_.eval.every_steps;
        }
    }
    if (solved_ || steps >= config_.step_budget ||
        (config_.time_budget_s > 0.0 && elapsed() >= config_.time_budget_s)) {
        if (evals_.empty() || evals_.back().env_steps != steps) {
            evaluate();
        }
        finished_ = true;
    }
}

void DeterministicRun::broadcast()
{
    for (auto& c : containers_) {
        central_->receive_head(over_wire_as(c->head_upload()));
    }
    if (auto weights = central_->broadcast()) {
        const auto received = over_wire_as(*weights);
        for (auto& c : containers_) {
            c->install(received);
        }
    }
}

void DeterministicRun::evaluate()
{
    EvalPoint point;
    point.env_steps = env_steps();
    point.wall_s = elapsed();
    const auto stats = central_->evaluate(config_.eval.episodes, config_.eval.seed);
    point.mean = stats.mean;
    point.median = stats.median;
    point.divergence = central_->policy_divergence();
    for (const auto& c : containers_) {
        point.container_means.push_back(centralizer::evaluate_policy(central_->env(), c->learner().acting_params(),
                                                                     c->dims(), config_.eval.episodes,
                                                                     config_.eval.seed)
                                            .mean);
    }
    evals_.push_back(point);
    if (config_.eval.stop_at_return && !solved_ && point.mean >= *config_.eval.stop_at_return - 1e-9) {
        solved_ = true;
        solved_at_ = point.env_steps;
    }
    if (metrics_) {
        metrics::MetricsRow row;
        row.wall_clock_s = point.wall_s;
        row.env_steps_total = point.env_steps;
        row.eval_mean_return = point.mean;
        row.eval_median_return = point.median;
        row.td_loss = central_->learner().last_td();
        row.policy_divergence = point.divergence;
        row.buffer_sizes.push_back(central_->buffer().buffer().size());
        for (const auto& c : containers_) {
            row.kl_mean_per_container.push_back(c->last_step().kl_mean);
            row.buffer_sizes.push_back(c->buffer().buffer().size());
            row.dropped_episodes += c->dropped_episodes();
        }
        row.central_updates = central_->learner().learner().updates();
        row.broadcast_version = central_->learner().broadcast_version();
        metrics_->write(row);
    }
}

RunSummary DeterministicRun::summary() const
{
    RunSummary s;
    s.seed = seed_;
    s.env_steps = env_steps();
    s.ticks = ticks_;
    s.wall_s = elapsed();
    s.finished = finished_;
    s.solved = solved_;
    s.solved_at_steps = solved_at_;
    s.evals = evals_;
    if (!evals_.empty()) {
        s.final_mean = evals_.back().mean;
        s.final_median = evals_.back().median;
    }
    return s;
}

RunSummary DeterministicRun::run(std::optional<std::uint64_t> max_ticks)
{
    const std::uint64_t stop = max_ticks ? ticks_ + *max_ticks : ~std::uint64_t{0};
    while (!finished_ && ticks_ < stop) {
        tick();
    }
    if (run_dir_) {
        save_checkpoint(*run_dir_ / "checkpoint.bin");
        numerics::save_params(*run_dir_ / "central_params.bin", central_->learner().learner().online());
        write_summary();
    }
    return summary();
}

void DeterministicRun::write_summary() const
{
    const auto s = summary();
    nlohmann::json j{{"seed", s.seed},
                     {"mode", "deterministic"},
                     {"env_steps", s.env_steps},
                     {"ticks", s.ticks},
                     {"wall_s", s.wall_s},
                     {"finished", s.finished},
                     {"solved", s.solved},
                     {"final_mean_return", s.final_mean},
                     {"final_median_return", s.final_median},
                     {"acked_batches", acked_},
                     {"central", central_->stats()}};
    if (s.solved_at_steps) {
        j["solved_at_steps"] = *s.solved_at_steps;
    }
    for (const auto& c : containers_) {
        j["containers"].push_back(c->stats());
    }
    j["evaluations"] = nlohmann::json::array();
    for (const auto& e : evals_) {
        j["evaluations"].push_back({{"env_steps", e.env_steps},
                                    {"wall_s", e.wall_s},
                                    {"mean_return", e.mean},
                                    {"median_return", e.median},
                                    {"policy_divergence", e.divergence},
                                    {"container_mean_returns", e.container_means}});
    }
    std::ofstream(*run_dir_ / "summary.json") << j.dump(2) << '\n';
}

void DeterministicRun::save_checkpoint(const fs::path& file) const
{
    numerics::ByteWriter w;
    w.str(to_json(config_).dump());
    w.u64(seed_);
    w.u64(ticks_);
    w.u64(next_eval_);
    w.u8(finished_ ? 1 : 0);
    w.u8(solved_ ? 1 : 0);
    w.u64(solved_at_ ? *solved_at_ + 1 : 0);
    w.f64(elapsed());
    w.u64(acked_);
    for (const auto b : batch_counters_) {
        w.u64(b);
    }
    w.u32(static_cast<std::uint32_t>(evals_.size()));
    for (const auto& e : evals_) {
        w.u64(e.env_steps);
        w.f64(e.wall_s);
        w.f64(e.mean);
        w.f64(e.median);
        w.f64(e.divergence);
        w.u32(static_cast<std::uint32_t>(e.container_means.size()));
        for (double v : e.container_means) w.f64(v);
    }
    central_->save(w);
    for (const auto& c : containers_) {
        c->save(w);
    }
    const fs::path tmp = file.string() + ".tmp";
    numerics::write_sealed(tmp, numerics::FileKind::run_state, numerics::checkpoint_version, w.buffer());
    fs::rename(tmp, file);
}

void DeterministicRun::load_checkpoint(const fs::path& file)
{
    const auto payload = numerics::read_sealed(file, numerics::FileKind::run_state, numerics::checkpoint_version);
    numerics::ByteReader r{payload};
    const auto stored = r.str();
    if (stored != to_json(config_).dump()) {
        throw IntegrityError(file.string() + " was written for a different configuration");
    }
    if (r.u64() != seed_) {
        throw IntegrityError(file.string() + " was written for a different seed");
    }
    // Decode into fresh objects first so a damaged payload leaves this run untouched.
    auto central = std::make_unique<centralizer::CentralCore>(central_config(config_, seed_));
    std::vector<std::unique_ptr<container::ContainerCore>> containers;
    for (std::uint32_t c = 0; c < config_.containers; ++c) {
        containers.push_back(std::make_unique<container::ContainerCore>(container_config(config_, seed_, c)));
    }
    const auto ticks = r.u64();
    const auto next_eval = r.u64();
    const bool finished = r.u8() != 0;
    const bool solved = r.u8() != 0;
    const auto solved_at = r.u64();
    const double wall = r.f64();
    const auto acked = r.u64();
    std::vector<std::uint64_t> counters(config_.containers);
    for (auto& b : counters) b = r.u64();
    std::vector<EvalPoint> evals(r.u32());
    for (auto& e : evals) {
        e.env_steps = r.u64();
        e.wall_s = r.f64();
        e.mean = r.f64();
        e.median = r.f64();
        e.divergence = r.f64();
        e.container_means.resize(r.u32());
        for (double& v : e.container_means) v = r.f64();
    }
    central->load(r);
    for (auto& c : containers) {
        c->load(r);
    }
    if (!r.done()) {
        throw IntegrityError(file.string() + ": trailing bytes after the run state");
    }
    central_ = std::move(central);
    containers_ = std::move(containers);
    ticks_ = ticks;
    next_eval_ = next_eval;
    finished_ = finished;
    solved_ = solved;
    solved_at_ = solved_at ? std::optional<std::uint64_t>(solved_at - 1) : std::nullopt;
    wall_offset_ = wall;
    started_ = std::chrono::steady_clock::now();
    acked_ = acked;
    batch_counters_ = std::move(counters);
    evals_ = std::move(evals);
}

std::unique_ptr<DeterministicRun> DeterministicRun::resume(const fs::path& run_dir)
{
    const RunConfig config = read_run_config(run_dir);
    const auto file = run_dir / "checkpoint.bin";
    if (!fs::exists(file)) {
        throw ConfigError("no checkpoint.bin in " + run_dir.string());
    }
    std::unique_ptr<DeterministicRun> run{new DeterministicRun(config, config.seeds.front())};
    run->load_checkpoint(file);
    run->run_dir_ = run_dir;
    run->metrics_ = std::make_unique<metrics::MetricsWriter>(
        run_dir / "metrics.csv", "resumed at env_steps_total=" + std::to_string(run->env_steps()));
    return run;
}

}  // namespace cmarl::runner
