#include "cmarl/envs/climb.hpp"

#include <algorithm>

#include "cmarl/common/error.hpp"

namespace cmarl::envs {

ClimbEnv::ClimbEnv(ClimbConfig config) : config_{config}
{
    if (config_.n_agents < 1) {
        throw ConfigError("climb: need at least one agent");
    }
}

EnvSpec ClimbEnv::spec() const
{
    return EnvSpec{config_.n_agents, 3, config_.n_agents, 1, 1};
}

ReturnBounds ClimbEnv::return_bounds() const
{
    return {std::min(config_.partial_reward, 5.0), 10.0};
}

double ClimbEnv::payoff(std::span<const int> joint_action, double partial_reward)
{
    const auto picks = std::count(joint_action.begin(), joint_action.end(), 0);
    if (picks == static_cast<std::ptrdiff_t>(joint_action.size())) {
        return 10.0;
    }
    return picks > 0 ? partial_reward : 5.0;
}

Env::Transition ClimbEnv::transition(std::span<const int> joint_action, numerics::Rng&)
{
    return {payoff(joint_action, config_.partial_reward), true};
}

std::vector<std::vector<double>> ClimbEnv::observations() const
{
    std::vector<std::vector<double>> obs;
    for (std::size_t i = 0; i < config_.n_agents; ++i) {
        obs.push_back(one_hot(i, config_.n_agents));
    }
    return obs;
}

std::vector<ActionMask> ClimbEnv::avail_actions() const
{
    return std::vector<ActionMask>(config_.n_agents, ActionMask(3, 1));
}

}  // namespace cmarl::envs
