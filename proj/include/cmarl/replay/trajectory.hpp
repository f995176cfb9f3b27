#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmarl/envs/env.hpp"
#include "cmarl/numerics/serialize.hpp"

namespace cmarl::replay {

// One recorded episode. Step t in [0, length) has observations, state and masks
// at index t and the joint action, reward and terminal flag taken from it; index
// `length` holds the final observation, state and masks.
struct Trajectory {
    std::uint64_t uid = 0;
    std::uint32_t container_id = 0;
    double priority = 0.0;

    std::uint32_t n_agents = 0;
    std::uint32_t n_actions = 0;
    std::uint32_t obs_dim = 0;
    std::uint32_t state_dim = 0;
    std::uint32_t length = 0;

    std::vector<double> obs;            // (length + 1) * n_agents * obs_dim
    std::vector<double> state;          // (length + 1) * state_dim
    std::vector<std::uint8_t> avail;    // (length + 1) * n_agents * n_actions
    std::vector<std::int32_t> actions;  // length * n_agents
    std::vector<double> rewards;        // length
    // 1 when the task ended at this step; time-limit cut-offs stay 0 so they bootstrap.
    std::vector<std::uint8_t> terminal; // length

    double total_reward() const noexcept;

    std::span<const double> obs_at(std::size_t t, std::size_t agent) const;
    std::span<const double> state_at(std::size_t t) const;
    std::span<const std::uint8_t> avail_at(std::size_t t, std::size_t agent) const;
    std::int32_t action_at(std::size_t t, std::size_t agent) const { return actions[t * n_agents + agent]; }

    // Structural consistency of every array with the header counts.
    bool well_formed() const noexcept;

    bool operator==(const Trajectory&) const = default;
};

// Accumulates an episode step by step.
class TrajectoryBuilder {
public:
    TrajectoryBuilder(const envs::EnvSpec& spec, const envs::Observation& first);

    void add(std::span<const int> joint_action, const envs::StepResult& step);
    std::size_t length() const noexcept { return traj_.length; }
    const Trajectory& current() const noexcept { return traj_; }
    Trajectory finish() &&;

private:
    void append_observation(const std::vector<std::vector<double>>& obs, const std::vector<double>& state,
                            const std::vector<envs::ActionMask>& avail);

    Trajectory traj_;
};

// Flat binary form shared by the wire protocol and checkpoints. Reading
// validates the header against the array sizes and throws IntegrityError.
void write_trajectory(numerics::ByteWriter& w, const Trajectory& t);
Trajectory read_trajectory(numerics::ByteReader& r);

}  // namespace cmarl::replay
