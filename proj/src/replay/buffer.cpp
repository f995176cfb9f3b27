#include "cmarl/replay/buffer.hpp"

#include <algorithm>

#include "cmarl/common/error.hpp"

namespace cmarl::replay {

namespace {

std::size_t checked_capacity(std::size_t capacity)
{
    if (capacity == 0) {
        throw ConfigError("replay buffer capacity must be positive");
    }
    return capacity;
}

}  // namespace

PrioritizedBuffer::PrioritizedBuffer(std::size_t capacity)
    : slots_(checked_capacity(capacity)), tree_{capacity}
{
}

void PrioritizedBuffer::insert(TrajectoryPtr trajectory)
{
    if (!trajectory || !(trajectory->priority > 0.0)) {
        throw ContractViolation("inserted trajectories need a positive priority");
    }
    if (slots_[next_]) {
        ++evicted_;
    } else {
        ++size_;
    }
    tree_.set(next_, trajectory->priority);
    slots_[next_] = std::move(trajectory);
    next_ = (next_ + 1) % slots_.size();
    ++inserted_;
}

void PrioritizedBuffer::insert(std::vector<Trajectory> batch)
{
    for (auto& t : batch) {
        insert(std::make_shared<const Trajectory>(std::move(t)));
    }
}

std::vector<TrajectoryPtr> PrioritizedBuffer::sample(std::size_t count, numerics::Rng& rng) const
{
    std::vector<TrajectoryPtr> out;
    if (empty()) {
        return out;
    }
    out.reserve(count);
    std::uniform_real_distribution<double> u(0.0, tree_.total());
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(slots_[tree_.find(u(rng))]);
    }
    return out;
}

std::vector<TrajectoryPtr> PrioritizedBuffer::contents() const
{
    std::vector<TrajectoryPtr> out;
    const std::size_t start = size_ == slots_.size() ? next_ : 0;
    for (std::size_t k = 0; k < size_; ++k) {
        out.push_back(slots_[(start + k) % slots_.size()]);
    }
    return out;
}

BufferStats PrioritizedBuffer::stats() const
{
    BufferStats s;
    s.size = size_;
    s.capacity = slots_.size();
    s.inserted = inserted_;
    s.evicted = evicted_;
    for (const auto& t : slots_) {
        if (t) {
            const auto bin = std::min<std::size_t>(static_cast<std::size_t>(t->priority * 10.0), 10);
            ++s.priority_histogram[bin];
        }
    }
    return s;
}

void PrioritizedBuffer::save(numerics::ByteWriter& w) const
{
    w.u64(slots_.size());
    w.u64(next_);
    w.u64(size_);
    w.u64(inserted_);
    w.u64(evicted_);
    for (const auto& t : slots_) {
        w.u8(t ? 1 : 0);
        if (t) {
            write_trajectory(w, *t);
        }
    }
}

void PrioritizedBuffer::load(numerics::ByteReader& r)
{
    const std::uint64_t capacity = r.u64();
    if (capacity != slots_.size()) {
        throw IntegrityError("buffer capacity " + std::to_string(capacity) + " does not match configured " +
                             std::to_string(slots_.size()));
    }
    const std::uint64_t next = r.u64();
    const std::uint64_t size = r.u64();
    if (next >= capacity || size > capacity) {
        throw IntegrityError("buffer cursor out of range");
    }
    std::vector<TrajectoryPtr> slots(capacity);
    SumTree tree(capacity);
    const std::uint64_t inserted = r.u64();
    const std::uint64_t evicted = r.u64();
    std::size_t present = 0;
    for (std::size_t i = 0; i < capacity; ++i) {
        if (r.u8() != 0) {
            auto t = std::make_shared<Trajectory>(read_trajectory(r));
            if (!(t->priority > 0.0)) {
                throw IntegrityError("stored trajectory without a positive priority");
            }
            tree.set(i, t->priority);
            slots[i] = std::move(t);
            ++present;
        }
    }
    if (present != size) {
        throw IntegrityError("buffer slot count disagrees with its size");
    }
    slots_ = std::move(slots);
    tree_ = std::move(tree);
    next_ = next;
    size_ = size;
    inserted_ = inserted;
    evicted_ = evicted;
}

}  // namespace cmarl::replay
