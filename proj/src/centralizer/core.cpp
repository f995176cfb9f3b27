#include "cmarl/centralizer/core.hpp"

#include "cmarl/common/error.hpp"
#include "cmarl/container/learner.hpp"
#include "cmarl/envs/registry.hpp"
#include "cmarl/valuefn/divergence.hpp"

namespace cmarl::centralizer {

namespace {

valuefn::LearnerConfig plain(valuefn::LearnerConfig c)
{
    c.loss.diversity = false;
    return c;
}

}  // namespace

CentralCore::CentralCore(const CentralConfig& config)
    : config_{config},
      prototype_{envs::make_env(config.env)},
      dims_{valuefn::NetDims::from_spec(prototype_->spec(), config.hidden, config.mixer_hidden)},
      inbound_{config.inbound_capacity},
      manager_{{&inbound_}, signal_},
      buffer_{config.buffer_capacity, config.batch_size, config.min_buffer, signal_,
              numerics::make_rng(config.seed, {0xB0, 0xCE})},
      learner_{dims_, container::central_initial_params(dims_, config.seed), plain(config.learner)}
{
}

net::Ack CentralCore::receive(net::TrajBatch batch)
{
    const net::Ack ack{batch.container_id, batch.batch_seq};
    for (auto& t : receiver_.accept(std::move(batch))) {
        if (!t.well_formed() || t.n_agents != dims_.n_agents || t.n_actions != dims_.n_actions ||
            t.obs_dim != dims_.obs_dim || t.state_dim != dims_.state_dim || !(t.priority > 0.0)) {
            throw IntegrityError("received trajectory does not match the task");
        }
        inbound_.push(std::move(t));
    }
    return ack;
}

void CentralCore::receive_head(const net::HeadUpload& upload)
{
    if (heads_.update(upload)) {
        ++receiver_.counters_for(upload.container_id).heads;
    }
}

std::size_t CentralCore::exchange()
{
    buffer_.request();
    auto batch = manager_.poll();
    if (!batch) {
        return 0;
    }
    const std::size_t n = batch->size();
    buffer_.insert(std::move(*batch));
    return n;
}

void CentralCore::learn_on(std::span<const replay::TrajectoryPtr> batch)
{
    learner_.step(batch);
}

std::size_t CentralCore::train(std::size_t count)
{
    std::size_t done = 0;
    for (; done < count; ++done) {
        const auto batch = buffer_.sample();
        if (batch.empty()) {
            break;
        }
        learn_on(batch);
    }
    return done;
}

std::optional<net::Weights> CentralCore::broadcast()
{
    return learner_.make_broadcast(heads_.entries());
}

EvalStats CentralCore::evaluate(std::size_t episodes, std::uint64_t seed) const
{
    return evaluate_policy(*prototype_, learner_.learner().online(), dims_, episodes, seed);
}

double CentralCore::policy_divergence(std::size_t episodes) const
{
    const auto entries = heads_.entries();
    if (entries.size() < 2 || buffer_.buffer().empty()) {
        return 0.0;
    }
    auto contents = buffer_.buffer().contents();
    const std::size_t from = contents.size() > episodes ? contents.size() - episodes : 0;
    std::vector<const replay::Trajectory*> rows;
    for (std::size_t k = from; k < contents.size(); ++k) {
        rows.push_back(contents[k].get());
    }
    std::vector<numerics::ParamSet> heads;
    for (const auto& e : entries) {
        heads.push_back(e.head);
    }
    return valuefn::policy_divergence(learner_.learner().online(), heads, dims_, rows, config_.temperature);
}

nlohmann::json CentralCore::stats() const
{
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [id, c] : receiver_.counters()) {
        per[std::to_string(id)] = {{"batches", c.batches},
                                   {"trajectories", c.trajectories},
                                   {"duplicates", c.duplicates},
                                   {"heads", c.heads}};
    }
    return nlohmann::json{{"updates", learner_.learner().updates()},
                          {"broadcast_version", learner_.broadcast_version()},
                          {"td_loss", learner_.last_td()},
                          {"buffer_size", buffer_.buffer().size()},
                          {"received", receiver_.total_trajectories()},
                          {"containers", per}};
}

void CentralCore::save(numerics::ByteWriter& w) const
{
    if (inbound_.size() != 0 || manager_.accumulated() != 0) {
        throw UsageError("central state saved with experience still in flight");
    }
    w.u64(inbound_.pushed());
    w.u64(inbound_.popped());
    w.u64(inbound_.dropped());
    w.u64(manager_.accumulated());
    receiver_.save(w);
    heads_.save(w);
    buffer_.save(w);
    learner_.save(w);
}

void CentralCore::load(numerics::ByteReader& r)
{
    const auto pushed = r.u64();
    const auto popped = r.u64();
    const auto dropped = r.u64();
    inbound_.restore_counters(pushed, popped, dropped);
    if (r.u64() != 0) {
        throw IntegrityError("central state with pending accumulation");
    }
    receiver_.load(r);
    heads_.load(r);
    buffer_.load(r);
    learner_.load(r);
}

}  // namespace cmarl::centralizer
