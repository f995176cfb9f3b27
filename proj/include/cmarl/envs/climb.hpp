#pragma once

#include "cmarl/envs/env.hpp"

namespace cmarl::envs {

struct ClimbConfig {
    std::size_t n_agents = 4;
    // Payoff when some but not all agents pick a0. The original game uses 0;
    // the one-shot form of Gather uses -5.
    double partial_reward = 0.0;
};

// One-step matrix game: 10 when every agent picks a0, `partial_reward` when
// only some do, 5 otherwise. Observation is the agent's one-hot index.
class ClimbEnv final : public Env {
public:
    explicit ClimbEnv(ClimbConfig config = {});

    std::string name() const override { return "climb"; }
    EnvSpec spec() const override;
    ReturnBounds return_bounds() const override;
    std::unique_ptr<Env> clone() const override { return std::make_unique<ClimbEnv>(*this); }

    static double payoff(std::span<const int> joint_action, double partial_reward);

protected:
    void reset_state(numerics::Rng&) override {}
    Transition transition(std::span<const int> joint_action, numerics::Rng& rng) override;
    std::vector<std::vector<double>> observations() const override;
    std::vector<double> state() const override { return {1.0}; }
    std::vector<ActionMask> avail_actions() const override;

private:
    ClimbConfig config_;
};

}  // namespace cmarl::envs
