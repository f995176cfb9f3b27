#pragma once

#include <array>

#include "cmarl/envs/env.hpp"

namespace cmarl::envs {

struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

struct GatherConfig {
    std::size_t n_agents = 5;
    int rows = 7;
    int cols = 7;
    std::array<Cell, 3> goals{Cell{1, 1}, Cell{1, 5}, Cell{5, 3}};
    std::size_t episode_limit = 12;
    // Agents spawning within this Manhattan distance of the optimal goal learn which goal it is.
    int sight_radius = 2;
    double optimal_reward = 10.0;
    double other_reward = 5.0;
    double partial_reward = -5.0;
};

// Temporally extended Climb game. One goal per episode is optimal. The episode
// ends with a reward once every agent stands on some goal cell: all on the
// optimal goal gives optimal_reward, none on it gives other_reward, a mix gives
// partial_reward. Timing out gives 0.
//
// Actions: 0 = stay, 1 = up, 2 = down, 3 = left, 4 = right.
// Observation: row / (rows-1), col / (cols-1), one-hot optimal goal (zeros if unknown).
class GatherEnv final : public Env {
public:
    explicit GatherEnv(GatherConfig config = {});

    std::string name() const override { return "gather"; }
    EnvSpec spec() const override;
    ReturnBounds return_bounds() const override;
    std::unique_ptr<Env> clone() const override { return std::make_unique<GatherEnv>(*this); }

    std::size_t optimal_goal() const noexcept { return optimal_; }
    const std::vector<Cell>& positions() const noexcept { return pos_; }
    bool informed(std::size_t agent) const noexcept { return informed_[agent] != 0; }
    // Places agents and picks the optimal goal directly; for tests.
    void place(const std::vector<Cell>& positions, std::size_t optimal_goal);

    // Reward for a configuration in which every agent stands on a goal.
    double settle_reward(const std::vector<Cell>& positions) const;

protected:
    void reset_state(numerics::Rng& rng) override;
    Transition transition(std::span<const int> joint_action, numerics::Rng& rng) override;
    std::vector<std::vector<double>> observations() const override;
    std::vector<double> state() const override;
    std::vector<ActionMask> avail_actions() const override;

private:
    int goal_index(const Cell& c) const noexcept;
    void update_informed();

    GatherConfig config_;
    std::size_t optimal_ = 0;
    std::vector<Cell> pos_;
    std::vector<std::uint8_t> informed_;
};

}  // namespace cmarl::envs
