#include "cmarl/valuefn/learner.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::valuefn {

QLearner::QLearner(const NetDims& dims, numerics::ParamSet initial, const LearnerConfig& config, Trainable trainable)
    : dims_{dims},
      config_{config},
      trainable_{trainable},
      online_{std::move(initial)},
      target_{online_},
      optimizer_{config.optimizer, online_.size()}
{
    if (!online_.same_layout(make_params(dims))) {
        throw ConfigError("learner parameters do not match the network layout");
    }
    if (config.target_interval == 0) {
        throw ConfigError("target_interval must be positive");
    }
}

LossTerms QLearner::update(std::span<const replay::Trajectory* const> batch,
                           std::span<const numerics::ParamSet> sibling_heads)
{
    LossTerms terms = qmix_loss(online_, target_, dims_, batch, config_.loss, trainable_, sibling_heads);
    numerics::clip_grad_norm(terms.grad, config_.grad_clip);
    optimizer_.step(online_.flat(), terms.grad);
    ++updates_;
    if (updates_ % config_.target_interval == 0) {
        target_ = online_;
        last_target_copy_ = updates_;
    }
    return terms;
}

void QLearner::install(const numerics::ParamSet& block, bool into_target)
{
    online_.assign(block);
    if (into_target) {
        target_.assign(block);
    }
}

void QLearner::save(numerics::ByteWriter& w) const
{
    numerics::write_params(w, online_);
    numerics::write_params(w, target_);
    w.u64(optimizer_.square_avg().size());
    w.f64s(optimizer_.square_avg());
    w.u64(updates_);
    w.u64(last_target_copy_);
}

void QLearner::load(numerics::ByteReader& r)
{
    numerics::ParamSet online = numerics::read_params(r);
    numerics::ParamSet target = numerics::read_params(r);
    if (!online.same_layout(online_) || !target.same_layout(target_)) {
        throw IntegrityError("learner state does not match the network layout");
    }
    const std::uint64_t n = r.u64();
    if (n != optimizer_.square_avg().size()) {
        throw IntegrityError("optimizer state has the wrong size");
    }
    r.f64s(optimizer_.square_avg());
    online_ = std::move(online);
    target_ = std::move(target);
    updates_ = r.u64();
    last_target_copy_ = r.u64();
}

}  // namespace cmarl::valuefn
