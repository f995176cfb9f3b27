#pragma once

#include <memory>

#include <json.hpp>

#include "cmarl/centralizer/central_learner.hpp"
#include "cmarl/centralizer/evaluate.hpp"
#include "cmarl/centralizer/receiver.hpp"
#include "cmarl/container/buffer_manager.hpp"
#include "cmarl/container/queue_manager.hpp"

namespace cmarl::centralizer {

struct CentralConfig {
    std::uint32_t n_containers = 1;
    std::uint64_t seed = 1;
    nlohmann::json env = {{"name", "climb"}};
    std::size_t hidden = 64;
    std::size_t mixer_hidden = 32;
    valuefn::LearnerConfig learner;
    std::size_t buffer_capacity = 5000;
    std::size_t batch_size = 32;
    std::size_t min_buffer = 32;
    double temperature = 1.0;
    std::size_t inbound_capacity = std::size_t{1} << 20;
};

// The centralizer's parts: the receiver feeds one inbound queue, which the
// queue manager gathers into batches for the central buffer manager on request;
// the learner trains on sampled batches.
class CentralCore {
public:
    explicit CentralCore(const CentralConfig& config);

    const CentralConfig& config() const noexcept { return config_; }
    const valuefn::NetDims& dims() const noexcept { return dims_; }
    const envs::Env& env() const noexcept { return *prototype_; }

    // Deduplicates, queues the new trajectories and returns the acknowledgement.
    net::Ack receive(net::TrajBatch batch);
    void receive_head(const net::HeadUpload& upload);

    // Buffer manager request followed by one queue-manager pass; returns how many were inserted.
    std::size_t exchange();
    // Queue-manager side only.
    std::optional<std::vector<replay::Trajectory>> gather() { return manager_.poll(); }

    std::size_t train(std::size_t count);
    void learn_on(std::span<const replay::TrajectoryPtr> batch);
    std::optional<net::Weights> broadcast();

    EvalStats evaluate(std::size_t episodes, std::uint64_t seed) const;
    // Inter-container KL of the registered heads over the newest central buffer entries.
    double policy_divergence(std::size_t episodes = 32) const;

    ExperienceReceiver& receiver() noexcept { return receiver_; }
    const ExperienceReceiver& receiver() const noexcept { return receiver_; }
    HeadRegistry& heads() noexcept { return heads_; }
    const HeadRegistry& heads() const noexcept { return heads_; }
    container::BufferManager& buffer() noexcept { return buffer_; }
    const container::BufferManager& buffer() const noexcept { return buffer_; }
    container::SharedSignal& signal() noexcept { return signal_; }
    container::ActorQueue& inbound() noexcept { return inbound_; }
    CentralLearner& learner() noexcept { return learner_; }
    const CentralLearner& learner() const noexcept { return learner_; }

    nlohmann::json stats() const;

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    CentralConfig config_;
    std::unique_ptr<envs::Env> prototype_;
    valuefn::NetDims dims_;
    ExperienceReceiver receiver_;
    HeadRegistry heads_;
    container::ActorQueue inbound_;
    container::SharedSignal signal_;
    container::MultiQueueManager manager_;
    container::BufferManager buffer_;
    CentralLearner learner_;
};

}  // namespace cmarl::centralizer
