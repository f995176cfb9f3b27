#include "cmarl/envs/env.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::envs {

Observation Env::reset(std::uint64_t seed)
{
    rng_.seed(seed);
    t_ = 0;
    over_ = false;
    reset_state(rng_);
    return observe();
}

StepResult Env::step(std::span<const int> joint_action)
{
    const EnvSpec s = spec();
    if (over_) {
        throw ContractViolation(name() + ": step after the episode ended");
    }
    if (joint_action.size() != s.n_agents) {
        throw ContractViolation(name() + ": expected " + std::to_string(s.n_agents) + " actions, got " +
                                std::to_string(joint_action.size()));
    }
    const auto masks = avail_actions();
    for (std::size_t i = 0; i < s.n_agents; ++i) {
        const int a = joint_action[i];
        if (a < 0 || static_cast<std::size_t>(a) >= s.n_actions || masks[i][static_cast<std::size_t>(a)] == 0) {
            throw ContractViolation(name() + ": agent " + std::to_string(i) + " chose illegal action " +
                                    std::to_string(a));
        }
    }
    const Transition tr = transition(joint_action, rng_);
    ++t_;
    StepResult out;
    out.reward = tr.reward;
    out.truncated = !tr.terminal && t_ >= s.episode_limit;
    out.terminated = tr.terminal || out.truncated;
    over_ = out.terminated;
    out.next_obs = observations();
    out.next_state = state();
    out.avail_actions = avail_actions();
    return out;
}

Observation Env::observe() const
{
    return Observation{observations(), state(), avail_actions()};
}

std::vector<double> one_hot(std::size_t index, std::size_t size)
{
    std::vector<double> v(size, 0.0);
    if (index < size) {
        v[index] = 1.0;
    }
    return v;
}

}  // namespace cmarl::envs
