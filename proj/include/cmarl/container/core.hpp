#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cmarl/container/actor.hpp"
#include "cmarl/container/buffer_manager.hpp"
#include "cmarl/container/learner.hpp"
#include "cmarl/container/priority_stage.hpp"
#include "cmarl/container/queue_manager.hpp"
#include "cmarl/valuefn/policy.hpp"

namespace cmarl::container {

struct ContainerConfig {
    std::uint32_t container_id = 0;
    std::uint32_t n_containers = 1;
    std::uint32_t k_actors = 4;
    std::uint64_t seed = 1;
    nlohmann::json env = {{"name", "climb"}};
    std::size_t hidden = 64;
    std::size_t mixer_hidden = 32;
    valuefn::LearnerConfig learner;
    bool follow_central = false;
    valuefn::EpsilonSchedule epsilon;
    double eta_percent = 50.0;
    double priority_eps = 0.01;
    // Return normalization; the environment's own bounds when absent.
    std::optional<envs::ReturnBounds> bounds;
    std::size_t buffer_capacity = 5000;
    std::size_t batch_size = 32;
    std::size_t min_buffer = 32;
    std::size_t actor_queue_capacity = 64;
};

// Everything one container owns. Each part is touched by exactly one worker:
// actors by their own thread, the queue manager and priority stage by the
// gathering worker, the buffer manager by its worker and the learner by the
// learning worker. The deterministic runner calls the same parts in a fixed order.
class ContainerCore {
public:
    explicit ContainerCore(const ContainerConfig& config);

    const ContainerConfig& config() const noexcept { return config_; }
    const valuefn::NetDims& dims() const noexcept { return dims_; }

    // One episode per actor with the current snapshot, pushed to the actor queues.
    void run_actors();
    void run_actor(std::size_t index);
    // Accounting for an episode an actor thread pushed itself.
    void count_episode(std::uint64_t length) noexcept
    {
        env_steps_ += length;
        ++episodes_;
    }

    struct Exchange {
        std::size_t inserted = 0;
        std::vector<replay::Trajectory> transfer;
    };
    // The buffer manager asks for experience; whatever the queue manager has
    // gathered is prioritized, inserted, and the eta% share returned.
    Exchange exchange();
    // Queue manager side only: poll once, prioritize, return (batch, transfer).
    std::optional<std::pair<std::vector<replay::Trajectory>, std::vector<replay::Trajectory>>> gather();

    // Up to `count` learner steps on sampled batches; returns how many ran.
    std::size_t train(std::size_t count);
    void learn_on(std::span<const replay::TrajectoryPtr> batch);
    void install(const net::Weights& weights);
    void publish_snapshot();

    net::HeadUpload head_upload();

    std::uint64_t env_steps() const noexcept { return env_steps_.load(); }
    std::uint64_t episodes() const noexcept { return episodes_.load(); }
    double epsilon() const noexcept { return config_.epsilon.at(env_steps()); }
    std::uint64_t dropped_episodes() const;
    const ContainerStepResult& last_step() const noexcept { return last_step_; }
    std::uint64_t learner_steps() const noexcept { return learner_.learner().updates(); }

    std::vector<std::unique_ptr<Actor>>& actors() noexcept { return actors_; }
    std::vector<std::unique_ptr<ActorQueue>>& queues() noexcept { return queues_; }
    SharedSignal& signal() noexcept { return signal_; }
    MultiQueueManager& queue_manager() noexcept { return manager_; }
    const MultiQueueManager& queue_manager() const noexcept { return manager_; }
    InitialPriorityStage& stage() noexcept { return stage_; }
    BufferManager& buffer() noexcept { return buffer_; }
    const BufferManager& buffer() const noexcept { return buffer_; }
    ContainerLearner& learner() noexcept { return learner_; }
    const ContainerLearner& learner() const noexcept { return learner_; }
    SnapshotSlot& snapshot() noexcept { return snapshot_; }

    nlohmann::json stats() const;

    // Only valid when queues and accumulation are empty (between deterministic ticks).
    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    ContainerConfig config_;
    std::unique_ptr<envs::Env> prototype_;
    valuefn::NetDims dims_;
    std::vector<std::unique_ptr<Actor>> actors_;
    std::vector<std::unique_ptr<ActorQueue>> queues_;
    SharedSignal signal_;
    MultiQueueManager manager_;
    InitialPriorityStage stage_;
    BufferManager buffer_;
    ContainerLearner learner_;
    SnapshotSlot snapshot_;
    std::atomic<std::uint64_t> env_steps_{0};
    std::atomic<std::uint64_t> episodes_{0};
    ContainerStepResult last_step_;
    std::uint64_t head_version_ = 0;
};

}  // namespace cmarl::container
