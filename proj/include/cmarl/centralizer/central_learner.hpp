#pragma once

#include <optional>

#include "cmarl/net/protocol.hpp"
#include "cmarl/replay/buffer.hpp"
#include "cmarl/valuefn/learner.hpp"

namespace cmarl::centralizer {

// The centralized QMIX learner: trains every parameter on the plain TD loss and
// packages the shared block for broadcast.
class CentralLearner {
public:
    CentralLearner(const valuefn::NetDims& dims, numerics::ParamSet initial, valuefn::LearnerConfig config);

    valuefn::LossTerms step(std::span<const replay::TrajectoryPtr> batch);

    // Next broadcast, or nothing when no update happened since the last one.
    std::optional<net::Weights> make_broadcast(const std::vector<net::HeadEntry>& heads);

    const valuefn::QLearner& learner() const noexcept { return learner_; }
    std::uint64_t broadcast_version() const noexcept { return broadcast_version_; }
    double last_td() const noexcept { return last_td_; }

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    valuefn::QLearner learner_;
    std::uint64_t broadcast_version_ = 0;
    std::uint64_t updates_at_broadcast_ = 0;
    double last_td_ = 0.0;
};

}  // namespace cmarl::centralizer
