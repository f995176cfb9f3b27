#pragma once

#include <filesystem>

#include "cmarl/centralizer/core.hpp"
#include "cmarl/container/core.hpp"
#include "cmarl/runner/config.hpp"

namespace cmarl::runner {

valuefn::LearnerConfig learner_config(const RunConfig& config);
container::ContainerConfig container_config(const RunConfig& config, std::uint64_t seed, std::uint32_t id);
centralizer::CentralConfig central_config(const RunConfig& config, std::uint64_t seed);

// <output_dir>/<name>/seed_<seed>
std::filesystem::path run_directory(const RunConfig& config, std::uint64_t seed);
// Creates the directory with config.json (seeds reduced to this one) and config.hash.
void prepare_run_directory(const std::filesystem::path& dir, const RunConfig& config, std::uint64_t seed);
// Reads config.json back from a run directory.
RunConfig read_run_config(const std::filesystem::path& dir);

}  // namespace cmarl::runner
