#pragma once

#include <optional>
#include <vector>

#include "cmarl/container/queues.hpp"
#include "cmarl/replay/trajectory.hpp"

namespace cmarl::container {

using ActorQueue = BoundedQueue<replay::Trajectory>;

struct QueueManagerCounters {
    std::uint64_t gathered = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t batches = 0;
};

// Keeps gathering finished episodes from every actor queue. Only when the
// buffer manager has raised the signal does it hand over everything gathered
// so far as one batch and clear the signal. It never touches the buffer.
class MultiQueueManager {
public:
    MultiQueueManager(std::vector<ActorQueue*> queues, SharedSignal& signal);

    // One pass over all queues. Returns a batch when the signal was raised and
    // something had been gathered.
    std::optional<std::vector<replay::Trajectory>> poll();

    std::size_t accumulated() const noexcept { return accumulation_.size(); }
    const QueueManagerCounters& counters() const noexcept { return counters_; }
    void restore_counters(const QueueManagerCounters& c) noexcept { counters_ = c; }

private:
    std::vector<ActorQueue*> queues_;
    SharedSignal& signal_;
    std::vector<replay::Trajectory> accumulation_;
    QueueManagerCounters counters_;
};

}  // namespace cmarl::container
