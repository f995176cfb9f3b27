#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cmarl/container/core.hpp"
#include "cmarl/net/protocol.hpp"

namespace cmarl::container {

struct RuntimeOptions {
    std::uint32_t incarnation = 0;
    // Centralizer port; without one the transfer share is counted and discarded.
    std::optional<std::uint16_t> port;
    bool learner = true;
    double head_upload_every_s = 5.0;
    double stats_every_s = 1.0;
    std::size_t feed_capacity = 2;
    std::size_t max_in_flight = 32;
    std::size_t max_pending_batches = 4096;
    // Transfers waiting for the link are merged into batches of at most this many episodes.
    std::size_t max_batch_episodes = 256;
    std::chrono::milliseconds orphan_timeout{std::chrono::seconds(120)};
    // Keep per-push enqueue latencies for the actor threads.
    bool record_latency = false;
};

struct LinkCounters {
    std::uint64_t connects = 0;
    std::uint64_t connect_failures = 0;
    std::uint64_t link_failures = 0;
    std::uint64_t batches_created = 0;
    std::uint64_t first_sends = 0;
    std::uint64_t resends = 0;
    std::uint64_t acked = 0;
    std::uint64_t trajectories_created = 0;
    std::uint64_t trajectories_acked = 0;
    std::uint64_t stray_acks = 0;
    std::uint64_t dropped_unsent = 0;
    std::uint64_t discarded_without_link = 0;
    std::uint64_t weights_received = 0;
    std::uint64_t heads_sent = 0;
};

// Runs a ContainerCore with one thread per role: k actors, the queue manager
// (with the priority stage), the buffer manager, the learner, and the link to
// the centralizer. Parts are only touched by their own thread or under the
// part's lock.
class ContainerRuntime {
public:
    ContainerRuntime(const ContainerConfig& config, RuntimeOptions options);
    ~ContainerRuntime();
    ContainerRuntime(const ContainerRuntime&) = delete;
    ContainerRuntime& operator=(const ContainerRuntime&) = delete;

    void start();
    // Stops and joins every thread. Safe to call twice.
    void stop();

    // The centralizer asked this container to finish.
    bool stop_requested() const noexcept { return stop_requested_.load(); }
    // No link for longer than the orphan timeout.
    bool orphaned() const noexcept { return orphaned_.load(); }

    ContainerCore& core() noexcept { return core_; }
    std::uint64_t env_steps() const noexcept { return core_.env_steps(); }
    std::uint64_t episodes() const noexcept { return core_.episodes(); }
    std::uint64_t learner_steps() const noexcept { return learner_steps_.load(); }
    std::uint64_t samples() const noexcept { return samples_.load(); }
    LinkCounters link_counters() const;
    // Every enqueue latency in seconds, when recorded. Only valid after stop().
    std::vector<double> enqueue_latencies() const;

    // Core stats plus link counters and the sequence numbers acknowledged so far.
    nlohmann::json summary() const;

private:
    void actor_loop(std::size_t index);
    void gather_loop();
    void buffer_loop();
    void learner_loop();
    void link_loop();
    nlohmann::json core_stats() const;
    void refresh_view();

    ContainerConfig config_;
    RuntimeOptions options_;
    ContainerCore core_;

    std::atomic<bool> stopping_{false};
    std::atomic<bool> stop_requested_{false};
    std::atomic<bool> orphaned_{false};
    std::vector<std::thread> threads_;

    mutable std::mutex gather_mutex_;
    mutable std::mutex buffer_mutex_;
    mutable std::mutex learner_mutex_;

    BoundedQueue<std::vector<replay::Trajectory>> inbox_;
    BoundedQueue<std::vector<replay::Trajectory>> outbox_;
    BoundedQueue<std::vector<replay::TrajectoryPtr>> feed_;

    std::mutex weights_mutex_;
    std::optional<net::Weights> pending_weights_;
    std::mutex head_mutex_;
    std::optional<net::HeadUpload> pending_head_;

    // Learner figures for reports, refreshed by the learner thread so readers never wait on a step.
    struct LearnerView {
        ContainerStepResult last;
        std::uint64_t updates = 0;
        std::uint64_t weights_version = 0;
        std::uint64_t fallback_steps = 0;
    };
    mutable std::mutex view_mutex_;
    LearnerView view_;

    std::atomic<std::uint64_t> learner_steps_{0};
    std::atomic<std::uint64_t> samples_{0};

    mutable std::mutex link_mutex_;
    LinkCounters link_;
    std::vector<std::uint64_t> acked_seqs_;
    std::uint64_t pending_at_exit_ = 0;

    mutable std::mutex latency_mutex_;
    std::vector<std::vector<double>> latencies_;
};

}  // namespace cmarl::container
