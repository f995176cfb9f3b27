#pragma once

#include "cmarl/envs/env.hpp"

namespace cmarl::envs {

struct DisperseConfig {
    std::size_t n_agents = 12;
    std::size_t n_hospitals = 4;
    std::size_t episode_limit = 10;
    // Need of the selected hospital is uniform in [1, max_need]; 0 means n_agents / 2.
    int max_need = 0;
};

// Each step one hospital is selected with a positive need x; the others need 0.
// Actions pick the hospital to work at next step. If y < x agents go to the
// selected hospital the team receives y - x.
//
// Observation: one-hot of the agent's current hospital, that hospital's need,
// one-hot of the selected hospital, its need (needs scaled by max_need).
class DisperseEnv final : public Env {
public:
    explicit DisperseEnv(DisperseConfig config = {});

    std::string name() const override { return "disperse"; }
    EnvSpec spec() const override;
    ReturnBounds return_bounds() const override;
    std::unique_ptr<Env> clone() const override { return std::make_unique<DisperseEnv>(*this); }

    std::size_t selected() const noexcept { return selected_; }
    int need(std::size_t hospital) const noexcept { return hospital == selected_ ? need_ : 0; }
    int max_need() const noexcept { return max_need_; }
    // Overrides the current demand; for tests and hand-built scenarios.
    void set_need(std::size_t hospital, int need);

    static double punishment(int needed, int arrived) { return arrived < needed ? arrived - needed : 0.0; }

protected:
    void reset_state(numerics::Rng& rng) override;
    Transition transition(std::span<const int> joint_action, numerics::Rng& rng) override;
    std::vector<std::vector<double>> observations() const override;
    std::vector<double> state() const override;
    std::vector<ActionMask> avail_actions() const override;

private:
    void draw_demand(numerics::Rng& rng);

    DisperseConfig config_;
    int max_need_;
    std::size_t selected_ = 0;
    int need_ = 1;
    std::vector<std::size_t> location_;
};

}  // namespace cmarl::envs
