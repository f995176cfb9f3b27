#include "cmarl/container/queue_manager.hpp"

namespace cmarl::container {

MultiQueueManager::MultiQueueManager(std::vector<ActorQueue*> queues, SharedSignal& signal)
    : queues_{std::move(queues)}, signal_{signal}
{
}

std::optional<std::vector<replay::Trajectory>> MultiQueueManager::poll()
{
    for (ActorQueue* q : queues_) {
        counters_.gathered += q->drain_into(accumulation_);
    }
    if (!signal_.raised() || accumulation_.empty()) {
        return std::nullopt;
    }
    std::vector<replay::Trajectory> batch;
    batch.swap(accumulation_);
    counters_.forwarded += batch.size();
    ++counters_.batches;
    signal_.clear();
    return batch;
}

}  // namespace cmarl::container
