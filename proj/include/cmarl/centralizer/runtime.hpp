#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cmarl/centralizer/core.hpp"
#include "cmarl/net/socket.hpp"

namespace cmarl::centralizer {

struct CentralRuntimeOptions {
    std::uint16_t port = 0;
    double broadcast_every_s = 5.0;
    std::uint32_t updates_per_batch = 1;
    double min_updates_per_s = 10.0;
    std::size_t feed_capacity = 2;
};

// Latest report of one container process.
struct ContainerReport {
    std::uint32_t incarnation = 0;
    std::uint64_t env_steps = 0;
    double kl_mean = 0.0;
    std::size_t buffer_size = 0;
    std::uint64_t dropped_episodes = 0;
};

// Parks every worker thread between iterations so the owner can touch all parts at once.
class Quiescer {
public:
    explicit Quiescer(std::size_t workers) : workers_{workers} {}
    // Called by workers at the top of every iteration.
    void checkpoint();
    // Blocks until all workers are parked; they stay parked until resume().
    void pause();
    void resume();
    void set_workers(std::size_t n);

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t workers_;
    std::size_t parked_ = 0;
    bool requested_ = false;
};

// Runs a CentralCore with an I/O thread serving every container connection,
// a queue-manager thread, a buffer-manager thread and a learner thread.
class CentralRuntime {
public:
    CentralRuntime(const CentralConfig& config, CentralRuntimeOptions options);
    ~CentralRuntime();
    CentralRuntime(const CentralRuntime&) = delete;
    CentralRuntime& operator=(const CentralRuntime&) = delete;

    // Binds the listener; the port is known afterwards.
    void start();
    void stop();
    std::uint16_t port() const noexcept { return port_; }

    // Drops every connection and refuses new ones while down.
    void set_link_down(bool down) noexcept { link_down_ = down; }
    // Tells every connected container to finish; containers connecting later are told too.
    void request_container_stop() noexcept { stop_containers_ = true; }
    std::size_t connected() const noexcept { return connected_.load(); }

    // Summed over every (container, incarnation) seen, plus the steps of a resumed run.
    std::uint64_t total_env_steps() const;
    std::map<std::uint32_t, ContainerReport> reports() const;
    std::uint64_t batches_received() const noexcept { return batches_received_.load(); }
    std::uint64_t updates() const;
    double last_td() const;
    std::uint64_t broadcast_version() const;
    std::size_t buffer_size() const;

    EvalStats evaluate(std::size_t episodes, std::uint64_t seed) const;
    double policy_divergence(std::size_t episodes = 32) const;
    numerics::ParamSet online_params() const;

    // Pauses the workers, moves everything in flight into the buffer, and
    // serializes the core and step accounting.
    void save(numerics::ByteWriter& w);
    void load(numerics::ByteReader& r);

    // Receiver accounting with every accepted sequence number.
    nlohmann::json summary() const;
    CentralCore& core() noexcept { return core_; }

private:
    struct Peer {
        net::Connection conn;
        std::optional<std::uint32_t> container_id;
        std::uint32_t incarnation = 0;
        std::uint64_t weights_sent = 0;
        bool told_to_stop = false;
    };

    void io_loop();
    void gather_loop();
    void buffer_loop();
    void learner_loop();
    void handle(Peer& peer, net::Message message);
    void drain_in_flight();

    CentralConfig config_;
    CentralRuntimeOptions options_;
    CentralCore core_;
    std::uint16_t port_ = 0;
    std::unique_ptr<net::Listener> listener_;

    std::atomic<bool> stopping_{false};
    std::atomic<bool> link_down_{false};
    std::atomic<bool> stop_containers_{false};
    std::atomic<std::size_t> connected_{0};
    std::atomic<std::uint64_t> batches_received_{0};
    std::vector<std::thread> threads_;
    Quiescer quiescer_{4};

    mutable std::mutex io_mutex_;
    mutable std::mutex buffer_mutex_;
    mutable std::mutex learner_mutex_;
    mutable std::mutex gather_mutex_;

    container::BoundedQueue<std::vector<replay::Trajectory>> inbox_;
    container::BoundedQueue<std::vector<replay::TrajectoryPtr>> feed_;

    mutable std::mutex weights_mutex_;
    std::shared_ptr<const std::vector<std::uint8_t>> weights_frame_;
    std::uint64_t weights_version_ = 0;

    mutable std::mutex report_mutex_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, ContainerReport> reports_;
    std::uint64_t resumed_steps_ = 0;
    std::uint64_t rejected_batches_ = 0;

    // Learner figures and a parameter copy, refreshed after every step so readers never wait on one.
    struct LearnerView {
        std::shared_ptr<const numerics::ParamSet> online;
        std::uint64_t updates = 0;
        double td = 0.0;
        std::uint64_t broadcast_version = 0;
    };
    void refresh_view();
    mutable std::mutex view_mutex_;
    LearnerView view_;

    std::chrono::steady_clock::time_point started_;
    std::uint64_t updates_at_start_ = 0;
};

}  // namespace cmarl::centralizer
