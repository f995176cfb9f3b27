#pragma once

#include "cmarl/envs/env.hpp"

namespace cmarl::envs {

// Islands sit on a rows x cols grid; 4-neighbours interfere.
struct AlohaConfig {
    std::size_t rows = 2;
    std::size_t cols = 5;
    std::size_t episode_limit = 10;
    int max_backlog = 5;
    int initial_backlog = 1;
    double arrival_prob = 0.6;
    double success_reward = 0.1;
    double collision_reward = -10.0;
    ReturnBounds bounds{-50.0, 5.0};
};

// Actions: 0 = wait, 1 = send (legal only with a non-empty backlog).
// A transmission collides when any neighbour also sends; each collided
// transmission costs `collision_reward` and keeps its packet.
// Observation: one-hot island index, then backlog / max_backlog.
class AlohaEnv final : public Env {
public:
    explicit AlohaEnv(AlohaConfig config = {});

    std::string name() const override { return "aloha"; }
    EnvSpec spec() const override;
    ReturnBounds return_bounds() const override { return config_.bounds; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<AlohaEnv>(*this); }

    const std::vector<int>& backlog() const noexcept { return backlog_; }
    bool adjacent(std::size_t a, std::size_t b) const noexcept;

protected:
    void reset_state(numerics::Rng& rng) override;
    Transition transition(std::span<const int> joint_action, numerics::Rng& rng) override;
    std::vector<std::vector<double>> observations() const override;
    std::vector<double> state() const override;
    std::vector<ActionMask> avail_actions() const override;

private:
    std::size_t n() const noexcept { return config_.rows * config_.cols; }

    AlohaConfig config_;
    std::vector<int> backlog_;
};

}  // namespace cmarl::envs
