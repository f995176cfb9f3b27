#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace cmarl::container {

// Multi-producer queue that never blocks a producer: when full, the oldest
// pending item is discarded and counted.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_{capacity == 0 ? 1 : capacity} {}

    // Returns true if an older item had to be dropped to make room.
    bool push(T item)
    {
        std::lock_guard lock{mutex_};
        bool dropped = false;
        if (items_.size() >= capacity_) {
            items_.pop_front();
            ++dropped_;
            dropped = true;
        }
        items_.push_back(std::move(item));
        ++pushed_;
        return dropped;
    }

    std::optional<T> try_pop()
    {
        std::lock_guard lock{mutex_};
        if (items_.empty()) {
            return std::nullopt;
        }
        T item = std::move(items_.front());
        items_.pop_front();
        ++popped_;
        return item;
    }

    // Moves every pending item to the back of `out`; returns how many.
    std::size_t drain_into(std::vector<T>& out)
    {
        std::lock_guard lock{mutex_};
        const std::size_t n = items_.size();
        for (auto& item : items_) {
            out.push_back(std::move(item));
        }
        items_.clear();
        popped_ += n;
        return n;
    }

    std::size_t size() const
    {
        std::lock_guard lock{mutex_};
        return items_.size();
    }
    bool full() const
    {
        std::lock_guard lock{mutex_};
        return items_.size() >= capacity_;
    }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t pushed() const
    {
        std::lock_guard lock{mutex_};
        return pushed_;
    }
    std::uint64_t popped() const
    {
        std::lock_guard lock{mutex_};
        return popped_;
    }
    std::uint64_t dropped() const
    {
        std::lock_guard lock{mutex_};
        return dropped_;
    }
    // Restores counters after a checkpoint load; the queue must be empty.
    void restore_counters(std::uint64_t pushed, std::uint64_t popped, std::uint64_t dropped)
    {
        std::lock_guard lock{mutex_};
        pushed_ = pushed;
        popped_ = popped;
        dropped_ = dropped;
    }

private:
    mutable std::mutex mutex_;
    std::deque<T> items_;
    std::size_t capacity_;
    std::uint64_t pushed_ = 0;
    std::uint64_t popped_ = 0;
    std::uint64_t dropped_ = 0;
};

// Request flag between the buffer manager (raises) and the multi-queue manager (clears).
class SharedSignal {
public:
    void raise() noexcept { flag_.store(true, std::memory_order_release); }
    bool raised() const noexcept { return flag_.load(std::memory_order_acquire); }
    void clear() noexcept { flag_.store(false, std::memory_order_release); }

private:
    std::atomic<bool> flag_{false};
};

}  // namespace cmarl::container
