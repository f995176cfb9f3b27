#pragma once

#include <memory>

#include "cmarl/envs/env.hpp"
#include "cmarl/numerics/serialize.hpp"
#include "cmarl/replay/trajectory.hpp"
#include "cmarl/valuefn/qnet.hpp"

namespace cmarl::container {

// Unique across the run: container id, actor id and episode index packed into 64 bits.
std::uint64_t trajectory_uid(std::uint32_t container_id, std::uint32_t actor_id, std::uint64_t episode) noexcept;

// One actor with its own environment instance. Episode e is reset with a seed
// derived from (seed, container, actor, e), so actors never share streams.
class Actor {
public:
    Actor(std::uint32_t container_id, std::uint32_t actor_id, std::uint64_t seed, std::unique_ptr<envs::Env> env);

    replay::Trajectory run_episode(const valuefn::ActingNet& net, double epsilon);

    std::uint32_t id() const noexcept { return actor_id_; }
    std::uint64_t episodes() const noexcept { return episodes_; }
    std::uint64_t steps() const noexcept { return steps_; }
    const envs::Env& env() const noexcept { return *env_; }

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    std::uint32_t container_id_;
    std::uint32_t actor_id_;
    std::uint64_t seed_;
    std::unique_ptr<envs::Env> env_;
    numerics::Rng rng_;
    std::uint64_t episodes_ = 0;
    std::uint64_t steps_ = 0;
};

}  // namespace cmarl::container
