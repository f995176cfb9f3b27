#pragma once

#include <span>

#include "cmarl/numerics/rmsprop.hpp"
#include "cmarl/numerics/serialize.hpp"
#include "cmarl/valuefn/loss.hpp"

namespace cmarl::valuefn {

struct LearnerConfig {
    LossConfig loss;
    numerics::RmspropConfig optimizer;
    double grad_clip = 10.0;
    // Target parameters are replaced by a copy of the online ones every this many updates.
    std::uint64_t target_interval = 200;
};

// Online and target networks with an RMSprop optimizer.
class QLearner {
public:
    QLearner(const NetDims& dims, numerics::ParamSet initial, const LearnerConfig& config, Trainable trainable);

    LossTerms update(std::span<const replay::Trajectory* const> batch,
                     std::span<const numerics::ParamSet> sibling_heads = {});

    const NetDims& dims() const noexcept { return dims_; }
    const LearnerConfig& config() const noexcept { return config_; }
    LearnerConfig& config() noexcept { return config_; }
    const numerics::ParamSet& online() const noexcept { return online_; }
    const numerics::ParamSet& target() const noexcept { return target_; }
    std::uint64_t updates() const noexcept { return updates_; }
    // Updates since the target was last refreshed.
    std::uint64_t target_staleness() const noexcept { return updates_ - last_target_copy_; }

    // Overwrites the named entries of the online (and optionally target) parameters.
    void install(const numerics::ParamSet& block, bool into_target);

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    NetDims dims_;
    LearnerConfig config_;
    Trainable trainable_;
    numerics::ParamSet online_;
    numerics::ParamSet target_;
    numerics::Rmsprop optimizer_;
    std::uint64_t updates_ = 0;
    std::uint64_t last_target_copy_ = 0;
};

}  // namespace cmarl::valuefn
