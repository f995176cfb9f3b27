#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "cmarl/metrics/curves.hpp"
#include "cmarl/runner/setup.hpp"

namespace cmarl::runner {

struct EvalPoint {
    std::uint64_t env_steps = 0;
    double wall_s = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double divergence = 0.0;
    std::vector<double> container_means;
};

struct RunSummary {
    std::uint64_t seed = 0;
    std::uint64_t env_steps = 0;
    std::uint64_t ticks = 0;
    double wall_s = 0.0;
    bool finished = false;
    bool solved = false;
    std::optional<std::uint64_t> solved_at_steps;
    double final_mean = 0.0;
    double final_median = 0.0;
    std::vector<EvalPoint> evals;
};

// Every worker role runs on one logical clock. A tick is: each actor plays one
// episode; each container's buffer manager requests and the queue manager
// hands over, the priority stage annotates and the transfer share crosses the
// wire codec to the centralizer; container learners train; the centralizer
// gathers and trains; every few ticks heads are uploaded and weights broadcast.
// Identical (config, seed) gives identical results, across checkpoints too.
class DeterministicRun {
public:
    // With a run directory, metrics.csv, summary.json and checkpoints go there.
    DeterministicRun(RunConfig config, std::uint64_t seed, std::optional<std::filesystem::path> run_dir = {});

    bool finished() const noexcept { return finished_; }
    void tick();
    // Until the budget is used up, the target return is reached, or `max_ticks` more ticks ran.
    RunSummary run(std::optional<std::uint64_t> max_ticks = {});
    RunSummary summary() const;

    std::uint64_t env_steps() const;
    std::uint64_t ticks() const noexcept { return ticks_; }
    const RunConfig& config() const noexcept { return config_; }
    centralizer::CentralCore& central() noexcept { return *central_; }
    std::vector<std::unique_ptr<container::ContainerCore>>& containers() noexcept { return containers_; }

    void save_checkpoint(const std::filesystem::path& file) const;
    void load_checkpoint(const std::filesystem::path& file);

    // Resume from a run directory written earlier.
    static std::unique_ptr<DeterministicRun> resume(const std::filesystem::path& run_dir);

private:
    void evaluate();
    void broadcast();
    double elapsed() const;
    void write_summary() const;

    RunConfig config_;
    std::uint64_t seed_;
    std::optional<std::filesystem::path> run_dir_;
    std::unique_ptr<centralizer::CentralCore> central_;
    std::vector<std::unique_ptr<container::ContainerCore>> containers_;
    std::vector<std::uint64_t> batch_counters_;
    std::uint64_t ticks_ = 0;
    std::uint64_t next_eval_ = 0;
    bool finished_ = false;
    bool solved_ = false;
    std::optional<std::uint64_t> solved_at_;
    std::vector<EvalPoint> evals_;
    double wall_offset_ = 0.0;
    std::chrono::steady_clock::time_point started_;
    std::unique_ptr<metrics::MetricsWriter> metrics_;
    std::uint64_t acked_ = 0;
};

}  // namespace cmarl::runner
