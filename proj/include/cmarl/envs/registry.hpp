#pragma once

#include <memory>

#include <json.hpp>

#include "cmarl/envs/env.hpp"

namespace cmarl::envs {

// Builds an environment from {"name": ..., <parameters>}. Unknown names or
// parameters throw ConfigError.
std::unique_ptr<Env> make_env(const nlohmann::json& config);

// Exhaustive search over joint actions from the env's current state for the
// rest of the episode. Chance events follow the instance's own random stream,
// so the result is exact for deterministic tasks and for the realized draw
// otherwise. Throws ConfigError if the instance is too large to enumerate.
double brute_force_optimal_return(const Env& env);

}  // namespace cmarl::envs
