#include "cmarl/container/learner.hpp"

#include "cmarl/common/log.hpp"

namespace cmarl::container {

using numerics::ParamSet;

ParamSet central_initial_params(const valuefn::NetDims& dims, std::uint64_t seed)
{
    auto rng = numerics::make_rng(seed, {0xCE});
    return valuefn::init_params(dims, rng);
}

ParamSet container_initial_params(const valuefn::NetDims& dims, std::uint64_t seed, std::uint32_t container_id)
{
    ParamSet params = central_initial_params(dims, seed);
    auto rng = numerics::make_rng(seed, {0xC0, container_id});
    params.assign(valuefn::init_params(dims, rng).subset(valuefn::head_prefix));
    return params;
}

ContainerLearner::ContainerLearner(const valuefn::NetDims& dims, ParamSet initial,
                                   const ContainerLearnerConfig& config)
    : config_{config},
      learner_{dims, initial, config.learner, valuefn::Trainable::head_and_mixer},
      central_head_{initial.subset(valuefn::head_prefix)}
{
}

ContainerStepResult ContainerLearner::step(std::span<const replay::TrajectoryPtr> batch)
{
    std::vector<const replay::Trajectory*> rows;
    rows.reserve(batch.size());
    for (const auto& t : batch) {
        rows.push_back(t.get());
    }
    std::vector<ParamSet> heads;
    for (const auto& [id, head] : siblings_) {
        heads.push_back(head);
    }

    auto& loss = learner_.config().loss;
    const double beta = loss.beta;
    const bool complete = siblings_.size() + 1 >= config_.n_containers;
    if (loss.diversity && !complete && beta > 0.0) {
        loss.beta = 0.0;
        ++fallback_steps_;
        if (!warned_) {
            log_warn("container " + std::to_string(config_.container_id) + ": only " +
                     std::to_string(siblings_.size()) + " sibling heads known, diversity term off until all arrive");
            warned_ = true;
        }
    }
    const auto terms = learner_.update(rows, heads);
    loss.beta = beta;
    return ContainerStepResult{terms.td, terms.kl_mean, terms.total, loss.diversity && complete && beta > 0.0};
}

void ContainerLearner::install(const net::Weights& weights)
{
    learner_.install(weights.shared, true);
    siblings_.clear();
    for (const auto& entry : weights.heads) {
        if (entry.container_id != config_.container_id) {
            siblings_[entry.container_id] = entry.head;
        }
    }
    if (siblings_.size() + 1 >= config_.n_containers) {
        warned_ = false;
    }
    central_head_ = weights.central_head;
    if (config_.follow_central) {
        learner_.install(central_head_, true);
    }
    weights_version_ = weights.version;
}

ParamSet ContainerLearner::acting_params() const
{
    ParamSet params = learner_.online();
    if (config_.follow_central) {
        params.assign(central_head_);
    }
    return params;
}

void ContainerLearner::save(numerics::ByteWriter& w) const
{
    learner_.save(w);
    w.u32(static_cast<std::uint32_t>(siblings_.size()));
    for (const auto& [id, head] : siblings_) {
        w.u32(id);
        numerics::write_params(w, head);
    }
    numerics::write_params(w, central_head_);
    w.u64(weights_version_);
    w.u64(fallback_steps_);
}

void ContainerLearner::load(numerics::ByteReader& r)
{
    learner_.load(r);
    siblings_.clear();
    const std::uint32_t n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
        const std::uint32_t id = r.u32();
        siblings_[id] = numerics::read_params(r);
    }
    central_head_ = numerics::read_params(r);
    weights_version_ = r.u64();
    fallback_steps_ = r.u64();
}

}  // namespace cmarl::container
