#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmarl/numerics/rmsprop.hpp"
#include "cmarl/valuefn/policy.hpp"

namespace cmarl::runner {

struct EvalConfig {
    std::size_t episodes = 20;
    std::uint64_t every_steps = 5000;  // deterministic mode
    double every_s = 10.0;             // parallel mode
    std::uint64_t seed = 777;
    // Stop as soon as a periodic evaluation reaches this mean return.
    std::optional<double> stop_at_return;
};

struct FaultConfig {
    // The centralizer stops serving container links during [at, at + for).
    double link_down_at_s = -1.0;
    double link_down_for_s = 0.0;
};

struct RunConfig {
    std::string name = "cmarl";
    nlohmann::json env = {{"name", "gather"}};
    std::uint32_t containers = 3;
    std::uint32_t actors_per_container = 4;
    double eta_percent = 50.0;
    double beta = 0.1;
    double lambda = 0.5;
    double temperature = 1.0;
    double gamma = 0.99;
    // Ablation: beta is 0, actors act with the broadcast central policy and
    // container heads are reset to it on every broadcast.
    bool no_diversity = false;
    valuefn::EpsilonSchedule epsilon;
    numerics::RmspropConfig optimizer;
    double grad_clip = 10.0;
    std::uint64_t target_update_interval = 200;
    double broadcast_interval_s = 5.0;
    std::uint64_t broadcast_every_ticks = 10;
    std::size_t buffer_capacity = 5000;
    std::size_t central_buffer_capacity = 5000;
    std::size_t batch_size = 32;
    std::size_t min_buffer = 32;
    double priority_eps = 0.01;
    // Return normalization; taken from the environment when absent.
    std::optional<double> return_low;
    std::optional<double> return_high;
    std::size_t hidden = 64;
    std::size_t mixer_hidden = 32;
    std::uint64_t step_budget = 200000;
    double time_budget_s = 0.0;  // 0: no limit
    std::vector<std::uint64_t> seeds{1};
    EvalConfig eval;
    double central_min_updates_per_s = 10.0;
    std::uint32_t central_updates_per_tick = 1;
    std::uint32_t container_updates_per_tick = 1;
    std::size_t actor_queue_capacity = 64;
    std::string output_dir = "runs";
    FaultConfig fault;
    std::uint32_t max_restarts = 3;
    // Parallel mode: how often the centralizer writes its state.
    double checkpoint_every_s = 60.0;
};

// Unknown keys, wrong types and out-of-range values throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
void validate(const RunConfig& config);

// Directory holding <name>.json overlays; CMARL_PRESET_DIR overrides the built-in path.
std::filesystem::path preset_dir();
std::vector<std::string> preset_names();
// Overlay: objects merge key by key, everything else replaces.
nlohmann::json apply_overlay(nlohmann::json base, const nlohmann::json& overlay);

// Reads a config file (or the defaults when `file` is empty) and applies a preset.
RunConfig load_run_config(const std::filesystem::path& file, const std::string& preset = {});

// Git-style blob hash of the canonical JSON form.
std::string config_hash(const RunConfig& config);

}  // namespace cmarl::runner
