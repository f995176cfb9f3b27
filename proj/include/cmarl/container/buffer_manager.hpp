#pragma once

#include <vector>

#include "cmarl/container/queues.hpp"
#include "cmarl/numerics/serialize.hpp"
#include "cmarl/replay/buffer.hpp"

namespace cmarl::container {

// Sole owner of a prioritized buffer. Asks the queue manager for experience
// through the shared signal and hands sampled batches to a learner.
class BufferManager {
public:
    BufferManager(std::size_t capacity, std::size_t batch_size, std::size_t min_size, SharedSignal& signal,
                  numerics::Rng rng);

    void request() noexcept { signal_.raise(); }
    void insert(std::vector<replay::Trajectory> batch);
    // Empty until the buffer holds at least `min_size` episodes.
    std::vector<replay::TrajectoryPtr> sample();

    bool ready() const noexcept { return buffer_.size() >= min_size_ && buffer_.size() > 0; }
    const replay::PrioritizedBuffer& buffer() const noexcept { return buffer_; }
    std::size_t batch_size() const noexcept { return batch_size_; }
    std::uint64_t samples() const noexcept { return samples_; }

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    replay::PrioritizedBuffer buffer_;
    std::size_t batch_size_;
    std::size_t min_size_;
    SharedSignal& signal_;
    numerics::Rng rng_;
    std::uint64_t samples_ = 0;
};

}  // namespace cmarl::container
