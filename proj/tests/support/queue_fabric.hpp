#pragma once

#include <memory>
#include <random>
#include <set>
#include <vector>

#include "cmarl/container/queue_manager.hpp"

namespace cmarl::testing {

struct FabricTally {
    std::uint64_t generated = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t accumulated = 0;
    std::uint64_t dropped = 0;
    std::uint64_t queued = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t batches = 0;
    std::uint64_t empty_batches = 0;
    // Forwarded episodes that were never generated or were also counted as dropped.
    std::uint64_t strays = 0;

    bool reconciles() const noexcept { return generated == forwarded + accumulated + dropped + queued; }
};

// Drives actor queues, the shared signal and the queue manager with randomly
// interleaved events on a single logical clock, followed by one queue-manager
// pass. With `final_drain` that pass is requested, so everything pending is forwarded.
inline FabricTally run_queue_fabric(std::size_t actors, std::size_t queue_capacity, std::size_t events,
                                    std::uint64_t seed, bool final_drain)
{
    std::vector<std::unique_ptr<container::ActorQueue>> queues;
    std::vector<container::ActorQueue*> raw;
    for (std::size_t a = 0; a < actors; ++a) {
        queues.push_back(std::make_unique<container::ActorQueue>(queue_capacity));
        raw.push_back(queues.back().get());
    }
    container::SharedSignal signal;
    container::MultiQueueManager manager{raw, signal};

    std::mt19937_64 rng{seed};
    std::uniform_int_distribution<int> kind(0, 9);
    std::uniform_int_distribution<std::size_t> pick(0, actors - 1);
    FabricTally tally;
    std::set<std::uint64_t> seen;
    std::set<std::uint64_t> dropped_uids;
    std::vector<std::vector<std::uint64_t>> pending(actors);

    const auto take = [&](std::vector<replay::Trajectory>& batch) {
        ++tally.batches;
        if (batch.empty()) {
            ++tally.empty_batches;
        }
        for (const auto& t : batch) {
            ++tally.forwarded;
            if (!seen.insert(t.uid).second) {
                ++tally.duplicates;
            }
            if (t.uid == 0 || t.uid > tally.generated || dropped_uids.count(t.uid) != 0) {
                ++tally.strays;
            }
        }
    };

    for (std::size_t e = 0; e < events; ++e) {
        const int k = kind(rng);
        if (k < 6) {
            const std::size_t a = pick(rng);
            replay::Trajectory t;
            t.uid = ++tally.generated;
            pending[a].push_back(t.uid);
            if (queues[a]->push(std::move(t))) {
                dropped_uids.insert(pending[a].front());
                pending[a].erase(pending[a].begin());
            }
        } else if (k < 8) {
            signal.raise();
        } else {
            if (auto batch = manager.poll()) {
                take(*batch);
            }
            for (auto& p : pending) {
                p.clear();
            }
        }
    }
    // One last pass: without a request it only gathers, so nothing stays in the actor queues.
    if (final_drain) {
        signal.raise();
    }
    if (auto batch = manager.poll()) {
        take(*batch);
    }
    signal.clear();
    tally.accumulated = manager.accumulated();
    for (const auto& q : queues) {
        tally.dropped += q->dropped();
        tally.queued += q->size();
    }
    return tally;
}

}  // namespace cmarl::testing
