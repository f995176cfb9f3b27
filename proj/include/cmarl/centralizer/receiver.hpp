#pragma once

#include <map>
#include <set>
#include <vector>

#include "cmarl/net/protocol.hpp"

namespace cmarl::centralizer {

struct ContainerCounters {
    std::uint64_t batches = 0;
    std::uint64_t trajectories = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t heads = 0;
};

// Accepts trajectory batches at most once per (container, batch_seq).
class ExperienceReceiver {
public:
    // Returns the trajectories to insert; empty for a replayed batch. Either way
    // the batch should be acknowledged.
    std::vector<replay::Trajectory> accept(net::TrajBatch batch);

    bool seen(std::uint32_t container_id, std::uint64_t batch_seq) const;
    std::vector<std::uint64_t> seqs_for(std::uint32_t container_id) const;
    const std::map<std::uint32_t, ContainerCounters>& counters() const noexcept { return counters_; }
    ContainerCounters& counters_for(std::uint32_t container_id) { return counters_[container_id]; }
    std::uint64_t total_trajectories() const noexcept;

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    std::map<std::uint32_t, std::set<std::uint64_t>> seen_;
    std::map<std::uint32_t, ContainerCounters> counters_;
};

// Latest head of every container; stale versions are ignored.
class HeadRegistry {
public:
    bool update(const net::HeadUpload& upload);
    std::vector<net::HeadEntry> entries() const;
    std::size_t size() const noexcept { return heads_.size(); }

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    std::map<std::uint32_t, net::HeadEntry> heads_;
};

}  // namespace cmarl::centralizer
