#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cmarl/runner/config.hpp"

namespace cmarl::runner {

struct WorkerArgs {
    std::string run_dir;
    std::uint32_t container_id = 0;
    std::uint16_t port = 0;
    std::uint32_t incarnation = 0;
    bool resume = false;
};

struct ParallelResult {
    std::uint64_t env_steps = 0;
    double final_mean = 0.0;
    int exit_status = 0;
    std::uint32_t restarts = 0;
};

// Spawns one centralizer process and one process per container from `exe`,
// restarts crashed containers up to max_restarts times, and waits for the
// centralizer to finish.
ParallelResult run_parallel(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& run_dir,
                            const std::filesystem::path& exe);
ParallelResult resume_parallel(const std::filesystem::path& run_dir, const std::filesystem::path& exe);

int centralizer_main(const WorkerArgs& args);
int container_main(const WorkerArgs& args);

}  // namespace cmarl::runner
