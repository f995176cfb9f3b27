#include "cmarl/container/buffer_manager.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::container {

BufferManager::BufferManager(std::size_t capacity, std::size_t batch_size, std::size_t min_size,
                             SharedSignal& signal, numerics::Rng rng)
    : buffer_{capacity}, batch_size_{batch_size}, min_size_{min_size}, signal_{signal}, rng_{std::move(rng)}
{
    if (batch_size == 0) {
        throw ConfigError("batch_size must be at least 1");
    }
}

void BufferManager::insert(std::vector<replay::Trajectory> batch)
{
    buffer_.insert(std::move(batch));
}

std::vector<replay::TrajectoryPtr> BufferManager::sample()
{
    if (!ready()) {
        return {};
    }
    ++samples_;
    return buffer_.sample(batch_size_, rng_);
}

void BufferManager::save(numerics::ByteWriter& w) const
{
    buffer_.save(w);
    w.u64(samples_);
    w.str(numerics::save_rng(rng_));
}

void BufferManager::load(numerics::ByteReader& r)
{
    buffer_.load(r);
    samples_ = r.u64();
    numerics::load_rng(rng_, r.str());
}

}  // namespace cmarl::container
