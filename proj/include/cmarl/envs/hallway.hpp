#pragma once

#include "cmarl/envs/env.hpp"

namespace cmarl::envs {

struct HallwayConfig {
    std::size_t n_groups = 4;
    std::size_t group_size = 3;
    int min_length = 4;
    int max_length = 8;
    // Chain lengths are a property of the layout, drawn once from this seed.
    std::uint64_t layout_seed = 0;
    std::vector<int> lengths;  // explicit lengths override the draw
    double collision_penalty = 0.5;
};

// One agent per chain; state 0 of every chain is the goal g.
// Actions: 0 = stay, 1 = step toward g, 2 = step away from g.
//
// A group "attempts" g when any active member steps onto it. When two or more
// groups attempt at once, their members are held back and the team receives
// -collision_penalty per attempting group. A lone attempting group wins +1 when
// all its members arrive together; otherwise it is removed with reward 0.
// Removed and winning agents may only stay. The episode ends once every group
// is finished or at the horizon max(l) + 10.
//
// Observation: one-hot position over [0, max_length], then an active flag.
class HallwayEnv final : public Env {
public:
    explicit HallwayEnv(HallwayConfig config = {});

    std::string name() const override { return "hallway"; }
    EnvSpec spec() const override;
    ReturnBounds return_bounds() const override;
    std::unique_ptr<Env> clone() const override { return std::make_unique<HallwayEnv>(*this); }

    const std::vector<int>& lengths() const noexcept { return lengths_; }
    const std::vector<int>& positions() const noexcept { return pos_; }
    bool active(std::size_t agent) const noexcept { return active_[agent] != 0; }
    std::size_t group_of(std::size_t agent) const noexcept { return agent / config_.group_size; }
    std::size_t horizon() const noexcept;
    // Places agents directly; for tests and hand-built scenarios.
    void set_positions(const std::vector<int>& positions);

protected:
    void reset_state(numerics::Rng& rng) override;
    Transition transition(std::span<const int> joint_action, numerics::Rng& rng) override;
    std::vector<std::vector<double>> observations() const override;
    std::vector<double> state() const override;
    std::vector<ActionMask> avail_actions() const override;

private:
    std::size_t n() const noexcept { return config_.n_groups * config_.group_size; }
    int obs_positions() const noexcept;

    HallwayConfig config_;
    std::vector<int> lengths_;
    std::vector<int> pos_;
    std::vector<std::uint8_t> active_;
};

}  // namespace cmarl::envs
