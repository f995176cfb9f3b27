#pragma once

#include <array>
#include <memory>
#include <vector>

#include "cmarl/numerics/rng.hpp"
#include "cmarl/numerics/serialize.hpp"
#include "cmarl/replay/sum_tree.hpp"
#include "cmarl/replay/trajectory.hpp"

namespace cmarl::replay {

using TrajectoryPtr = std::shared_ptr<const Trajectory>;

struct BufferStats {
    std::size_t size = 0;
    std::size_t capacity = 0;
    std::uint64_t inserted = 0;
    std::uint64_t evicted = 0;
    // Priorities bucketed over [0, 1.1) in tenths; the last bucket also takes anything larger.
    std::array<std::uint64_t, 11> priority_histogram{};
};

// FIFO ring of trajectories with priority-proportional sampling. Owned by a
// single worker; not thread-safe.
class PrioritizedBuffer {
public:
    explicit PrioritizedBuffer(std::size_t capacity);

    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return slots_.size(); }
    bool empty() const noexcept { return size_ == 0; }
    double total_priority() const noexcept { return tree_.total(); }

    // Every trajectory must carry a positive priority; a full ring evicts its oldest entry.
    void insert(TrajectoryPtr trajectory);
    void insert(std::vector<Trajectory> batch);

    // `count` independent draws with replacement. Empty result when the buffer is empty.
    std::vector<TrajectoryPtr> sample(std::size_t count, numerics::Rng& rng) const;

    // Oldest first.
    std::vector<TrajectoryPtr> contents() const;
    BufferStats stats() const;

    // Slot-exact, so sampling after a load matches sampling before the save.
    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    std::vector<TrajectoryPtr> slots_;
    SumTree tree_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
    std::uint64_t inserted_ = 0;
    std::uint64_t evicted_ = 0;
};

}  // namespace cmarl::replay
