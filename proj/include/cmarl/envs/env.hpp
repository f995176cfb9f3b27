#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cmarl/numerics/rng.hpp"

namespace cmarl::envs {

struct EnvSpec {
    std::size_t n_agents = 1;
    std::size_t n_actions = 1;
    std::size_t obs_dim = 1;
    std::size_t state_dim = 1;
    std::size_t episode_limit = 1;
};

using ActionMask = std::vector<std::uint8_t>;

struct Observation {
    std::vector<std::vector<double>> obs;    // per agent
    std::vector<double> state;
    std::vector<ActionMask> avail_actions;   // per agent
};

struct StepResult {
    double reward = 0.0;                     // team reward shared by all agents
    bool terminated = false;                 // episode over (task end or time limit)
    bool truncated = false;                  // ended only because the limit was hit
    std::vector<std::vector<double>> next_obs;
    std::vector<double> next_state;
    std::vector<ActionMask> avail_actions;
};

// Analytic lower and upper bounds on an episode's summed reward.
struct ReturnBounds {
    double low = 0.0;
    double high = 1.0;
};

// Dec-POMDP environment. Each instance belongs to exactly one actor.
class Env {
public:
    virtual ~Env() = default;

    virtual std::string name() const = 0;
    virtual EnvSpec spec() const = 0;
    virtual ReturnBounds return_bounds() const = 0;
    virtual std::unique_ptr<Env> clone() const = 0;

    // Starts a fresh episode; deterministic in `seed`.
    Observation reset(std::uint64_t seed);
    // Throws ContractViolation for an action outside its agent's mask or after the episode ended.
    StepResult step(std::span<const int> joint_action);

    Observation observe() const;
    std::size_t steps_taken() const noexcept { return t_; }
    bool episode_over() const noexcept { return over_; }

protected:
    struct Transition {
        double reward = 0.0;
        bool terminal = false;
    };

    virtual void reset_state(numerics::Rng& rng) = 0;
    virtual Transition transition(std::span<const int> joint_action, numerics::Rng& rng) = 0;
    virtual std::vector<std::vector<double>> observations() const = 0;
    virtual std::vector<double> state() const = 0;
    virtual std::vector<ActionMask> avail_actions() const = 0;

    numerics::Rng rng_{0};

private:
    std::size_t t_ = 0;
    bool over_ = false;
};

std::vector<double> one_hot(std::size_t index, std::size_t size);

}  // namespace cmarl::envs
