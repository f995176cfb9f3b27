#include "cmarl/container/core.hpp"

#include "cmarl/common/error.hpp"
#include "cmarl/envs/registry.hpp"

namespace cmarl::container {

namespace {

std::vector<std::unique_ptr<ActorQueue>> make_queues(const ContainerConfig& c)
{
    std::vector<std::unique_ptr<ActorQueue>> queues;
    for (std::uint32_t a = 0; a < c.k_actors; ++a) {
        queues.push_back(std::make_unique<ActorQueue>(c.actor_queue_capacity));
    }
    return queues;
}

std::vector<ActorQueue*> raw(const std::vector<std::unique_ptr<ActorQueue>>& queues)
{
    std::vector<ActorQueue*> out;
    for (const auto& q : queues) {
        out.push_back(q.get());
    }
    return out;
}

replay::PriorityBounds bounds_for(const ContainerConfig& c, const envs::Env& env)
{
    const auto b = c.bounds ? *c.bounds : env.return_bounds();
    return replay::PriorityBounds{b.low, b.high};
}

ContainerLearnerConfig learner_config(const ContainerConfig& c)
{
    ContainerLearnerConfig lc;
    lc.learner = c.learner;
    lc.container_id = c.container_id;
    lc.n_containers = c.n_containers;
    lc.follow_central = c.follow_central;
    return lc;
}

}  // namespace

ContainerCore::ContainerCore(const ContainerConfig& config)
    : config_{config},
      prototype_{envs::make_env(config.env)},
      dims_{valuefn::NetDims::from_spec(prototype_->spec(), config.hidden, config.mixer_hidden)},
      queues_{make_queues(config)},
      manager_{raw(queues_), signal_},
      stage_{bounds_for(config, *prototype_), config.eta_percent, config.priority_eps,
             numerics::make_rng(config.seed, {0x57, config.container_id})},
      buffer_{config.buffer_capacity, config.batch_size, config.min_buffer, signal_,
              numerics::make_rng(config.seed, {0xB0, config.container_id})},
      learner_{dims_, container_initial_params(dims_, config.seed, config.container_id), learner_config(config)}
{
    if (config.k_actors < 1) {
        throw ConfigError("a container needs at least one actor");
    }
    for (std::uint32_t a = 0; a < config.k_actors; ++a) {
        actors_.push_back(std::make_unique<Actor>(config.container_id, a, config.seed, envs::make_env(config.env)));
    }
    publish_snapshot();
}

void ContainerCore::run_actor(std::size_t index)
{
    const auto net = snapshot_.get();
    auto trajectory = actors_[index]->run_episode(*net, epsilon());
    const auto length = trajectory.length;
    queues_[index]->push(std::move(trajectory));
    count_episode(length);
}

void ContainerCore::run_actors()
{
    for (std::size_t a = 0; a < actors_.size(); ++a) {
        run_actor(a);
    }
}

std::optional<std::pair<std::vector<replay::Trajectory>, std::vector<replay::Trajectory>>> ContainerCore::gather()
{
    auto batch = manager_.poll();
    if (!batch) {
        return std::nullopt;
    }
    auto transfer = stage_.process(*batch);
    return std::make_pair(std::move(*batch), std::move(transfer));
}

ContainerCore::Exchange ContainerCore::exchange()
{
    buffer_.request();
    Exchange out;
    if (auto gathered = gather()) {
        out.inserted = gathered->first.size();
        buffer_.insert(std::move(gathered->first));
        out.transfer = std::move(gathered->second);
    }
    return out;
}

void ContainerCore::learn_on(std::span<const replay::TrajectoryPtr> batch)
{
    last_step_ = learner_.step(batch);
}

std::size_t ContainerCore::train(std::size_t count)
{
    std::size_t done = 0;
    for (; done < count; ++done) {
        const auto batch = buffer_.sample();
        if (batch.empty()) {
            break;
        }
        learn_on(batch);
    }
    if (done > 0) {
        publish_snapshot();
    }
    return done;
}

void ContainerCore::install(const net::Weights& weights)
{
    learner_.install(weights);
    publish_snapshot();
}

void ContainerCore::publish_snapshot()
{
    snapshot_.publish(std::make_shared<const valuefn::ActingNet>(learner_.acting_params(), dims_));
}

net::HeadUpload ContainerCore::head_upload()
{
    return net::HeadUpload{config_.container_id, ++head_version_, learner_.head()};
}

std::uint64_t ContainerCore::dropped_episodes() const
{
    std::uint64_t total = 0;
    for (const auto& q : queues_) {
        total += q->dropped();
    }
    return total;
}

nlohmann::json ContainerCore::stats() const
{
    const auto b = buffer_.buffer().stats();
    return nlohmann::json{{"container_id", config_.container_id},
                          {"env_steps", env_steps()},
                          {"episodes", episodes()},
                          {"epsilon", epsilon()},
                          {"dropped_episodes", dropped_episodes()},
                          {"learner_steps", learner_steps()},
                          {"td_loss", last_step_.td},
                          {"kl_mean", last_step_.kl_mean},
                          {"diversity_active", last_step_.diversity_active},
                          {"buffer_size", b.size},
                          {"buffer_inserted", b.inserted},
                          {"weights_version", learner_.weights_version()},
                          {"gathered", manager_.counters().gathered},
                          {"forwarded", manager_.counters().forwarded}};
}

void ContainerCore::save(numerics::ByteWriter& w) const
{
    if (manager_.accumulated() != 0) {
        throw UsageError("container state saved with experience still in flight");
    }
    for (const auto& q : queues_) {
        if (q->size() != 0) {
            throw UsageError("container state saved with experience still in flight");
        }
        w.u64(q->pushed());
        w.u64(q->popped());
        w.u64(q->dropped());
    }
    w.u64(manager_.counters().gathered);
    w.u64(manager_.counters().forwarded);
    w.u64(manager_.counters().batches);
    for (const auto& a : actors_) {
        a->save(w);
    }
    stage_.save(w);
    buffer_.save(w);
    learner_.save(w);
    w.u64(env_steps_.load());
    w.u64(episodes_.load());
    w.f64(last_step_.td);
    w.f64(last_step_.kl_mean);
    w.f64(last_step_.total);
    w.u8(last_step_.diversity_active ? 1 : 0);
    w.u64(head_version_);
}

void ContainerCore::load(numerics::ByteReader& r)
{
    for (auto& q : queues_) {
        const auto pushed = r.u64();
        const auto popped = r.u64();
        const auto dropped = r.u64();
        q->restore_counters(pushed, popped, dropped);
    }
    QueueManagerCounters c;
    c.gathered = r.u64();
    c.forwarded = r.u64();
    c.batches = r.u64();
    manager_.restore_counters(c);
    for (auto& a : actors_) {
        a->load(r);
    }
    stage_.load(r);
    buffer_.load(r);
    learner_.load(r);
    env_steps_ = r.u64();
    episodes_ = r.u64();
    last_step_.td = r.f64();
    last_step_.kl_mean = r.f64();
    last_step_.total = r.f64();
    last_step_.diversity_active = r.u8() != 0;
    head_version_ = r.u64();
    publish_snapshot();
}

}  // namespace cmarl::container
