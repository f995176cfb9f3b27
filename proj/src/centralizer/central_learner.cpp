#include "cmarl/centralizer/central_learner.hpp"

namespace cmarl::centralizer {

namespace {

valuefn::LearnerConfig central_config(valuefn::LearnerConfig config)
{
    config.loss.diversity = false;
    return config;
}

}  // namespace

CentralLearner::CentralLearner(const valuefn::NetDims& dims, numerics::ParamSet initial,
                               valuefn::LearnerConfig config)
    : learner_{dims, std::move(initial), central_config(config), valuefn::Trainable::everything}
{
}

valuefn::LossTerms CentralLearner::step(std::span<const replay::TrajectoryPtr> batch)
{
    std::vector<const replay::Trajectory*> rows;
    rows.reserve(batch.size());
    for (const auto& t : batch) {
        rows.push_back(t.get());
    }
    auto terms = learner_.update(rows);
    last_td_ = terms.td;
    return terms;
}

std::optional<net::Weights> CentralLearner::make_broadcast(const std::vector<net::HeadEntry>& heads)
{
    if (learner_.updates() == updates_at_broadcast_) {
        return std::nullopt;
    }
    updates_at_broadcast_ = learner_.updates();
    net::Weights w;
    w.version = ++broadcast_version_;
    w.shared = learner_.online().subset(valuefn::shared_prefix);
    w.central_head = learner_.online().subset(valuefn::head_prefix);
    w.heads = heads;
    return w;
}

void CentralLearner::save(numerics::ByteWriter& w) const
{
    learner_.save(w);
    w.u64(broadcast_version_);
    w.u64(updates_at_broadcast_);
    w.f64(last_td_);
}

void CentralLearner::load(numerics::ByteReader& r)
{
    learner_.load(r);
    broadcast_version_ = r.u64();
    updates_at_broadcast_ = r.u64();
    last_td_ = r.f64();
}

}  // namespace cmarl::centralizer
