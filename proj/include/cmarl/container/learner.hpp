#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "cmarl/net/protocol.hpp"
#include "cmarl/replay/buffer.hpp"
#include "cmarl/valuefn/learner.hpp"

namespace cmarl::container {

// Starting parameters shared by every learner of a run.
numerics::ParamSet central_initial_params(const valuefn::NetDims& dims, std::uint64_t seed);
// Same shared block and mixer as the central start, with a head drawn for this container.
numerics::ParamSet container_initial_params(const valuefn::NetDims& dims, std::uint64_t seed,
                                            std::uint32_t container_id);

struct ContainerLearnerConfig {
    valuefn::LearnerConfig learner;
    std::uint32_t container_id = 0;
    std::uint32_t n_containers = 1;
    // Act with the broadcast central policy and reset the head to it on every broadcast.
    bool follow_central = false;
};

struct ContainerStepResult {
    double td = 0.0;
    double kl_mean = 0.0;
    double total = 0.0;
    bool diversity_active = false;
};

// Trains the container head and mixer on the diversity-regularized loss. The
// shared block only changes when a broadcast is installed.
class ContainerLearner {
public:
    ContainerLearner(const valuefn::NetDims& dims, numerics::ParamSet initial, const ContainerLearnerConfig& config);

    ContainerStepResult step(std::span<const replay::TrajectoryPtr> batch);

    // Shared block into online and target, sibling heads from everyone else.
    void install(const net::Weights& weights);

    numerics::ParamSet head() const { return learner_.online().subset(valuefn::head_prefix); }
    // Parameters actors should act with.
    numerics::ParamSet acting_params() const;

    const valuefn::QLearner& learner() const noexcept { return learner_; }
    const ContainerLearnerConfig& config() const noexcept { return config_; }
    std::uint64_t weights_version() const noexcept { return weights_version_; }
    std::size_t sibling_count() const noexcept { return siblings_.size(); }
    std::uint64_t fallback_steps() const noexcept { return fallback_steps_; }

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    ContainerLearnerConfig config_;
    valuefn::QLearner learner_;
    std::map<std::uint32_t, numerics::ParamSet> siblings_;
    numerics::ParamSet central_head_;
    std::uint64_t weights_version_ = 0;
    std::uint64_t fallback_steps_ = 0;
    bool warned_ = false;
};

// Latest published acting network; readers take a reference between episodes.
class SnapshotSlot {
public:
    void publish(std::shared_ptr<const valuefn::ActingNet> net)
    {
        std::lock_guard lock{mutex_};
        net_ = std::move(net);
        ++version_;
    }
    std::shared_ptr<const valuefn::ActingNet> get() const
    {
        std::lock_guard lock{mutex_};
        return net_;
    }
    std::uint64_t version() const
    {
        std::lock_guard lock{mutex_};
        return version_;
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const valuefn::ActingNet> net_;
    std::uint64_t version_ = 0;
};

}  // namespace cmarl::container
