#include "cmarl/centralizer/receiver.hpp"

namespace cmarl::centralizer {

std::vector<replay::Trajectory> ExperienceReceiver::accept(net::TrajBatch batch)
{
    auto& counters = counters_[batch.container_id];
    if (!seen_[batch.container_id].insert(batch.batch_seq).second) {
        ++counters.duplicates;
        return {};
    }
    ++counters.batches;
    counters.trajectories += batch.trajectories.size();
    return std::move(batch.trajectories);
}

bool ExperienceReceiver::seen(std::uint32_t container_id, std::uint64_t batch_seq) const
{
    const auto it = seen_.find(container_id);
    return it != seen_.end() && it->second.count(batch_seq) != 0;
}

std::vector<std::uint64_t> ExperienceReceiver::seqs_for(std::uint32_t container_id) const
{
    const auto it = seen_.find(container_id);
    if (it == seen_.end()) {
        return {};
    }
    return {it->second.begin(), it->second.end()};
}

std::uint64_t ExperienceReceiver::total_trajectories() const noexcept
{
    std::uint64_t total = 0;
    for (const auto& [id, c] : counters_) {
        total += c.trajectories;
    }
    return total;
}

void ExperienceReceiver::save(numerics::ByteWriter& w) const
{
    w.u32(static_cast<std::uint32_t>(seen_.size()));
    for (const auto& [id, seqs] : seen_) {
        w.u32(id);
        w.u64(seqs.size());
        for (const auto s : seqs) {
            w.u64(s);
        }
    }
    w.u32(static_cast<std::uint32_t>(counters_.size()));
    for (const auto& [id, c] : counters_) {
        w.u32(id);
        w.u64(c.batches);
        w.u64(c.trajectories);
        w.u64(c.duplicates);
        w.u64(c.heads);
    }
}

void ExperienceReceiver::load(numerics::ByteReader& r)
{
    seen_.clear();
    counters_.clear();
    const std::uint32_t n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
        auto& seqs = seen_[r.u32()];
        const std::uint64_t m = r.u64();
        for (std::uint64_t j = 0; j < m; ++j) {
            seqs.insert(r.u64());
        }
    }
    const std::uint32_t c = r.u32();
    for (std::uint32_t k = 0; k < c; ++k) {
        auto& counters = counters_[r.u32()];
        counters.batches = r.u64();
        counters.trajectories = r.u64();
        counters.duplicates = r.u64();
        counters.heads = r.u64();
    }
}

bool HeadRegistry::update(const net::HeadUpload& upload)
{
    auto it = heads_.find(upload.container_id);
    if (it != heads_.end() && it->second.version >= upload.version) {
        return false;
    }
    heads_[upload.container_id] = net::HeadEntry{upload.container_id, upload.version, upload.head};
    return true;
}

std::vector<net::HeadEntry> HeadRegistry::entries() const
{
    std::vector<net::HeadEntry> out;
    for (const auto& [id, entry] : heads_) {
        out.push_back(entry);
    }
    return out;
}

void HeadRegistry::save(numerics::ByteWriter& w) const
{
    w.u32(static_cast<std::uint32_t>(heads_.size()));
    for (const auto& [id, entry] : heads_) {
        w.u32(id);
        w.u64(entry.version);
        numerics::write_params(w, entry.head);
    }
}

void HeadRegistry::load(numerics::ByteReader& r)
{
    heads_.clear();
    const std::uint32_t n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
        net::HeadEntry entry;
        entry.container_id = r.u32();
        entry.version = r.u64();
        entry.head = numerics::read_params(r);
        heads_[entry.container_id] = std::move(entry);
    }
}

}  // namespace cmarl::centralizer
