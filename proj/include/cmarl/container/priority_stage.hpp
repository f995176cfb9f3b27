#pragma once

#include <vector>

#include "cmarl/numerics/serialize.hpp"
#include "cmarl/replay/priority.hpp"

namespace cmarl::container {

// Sits between the queue manager and the buffer manager. Annotates each batch
// with initial priorities and picks the eta% share that also goes to the centralizer.
class InitialPriorityStage {
public:
    InitialPriorityStage(replay::PriorityBounds bounds, double eta_percent, double eps, numerics::Rng rng);

    // Priorities are written in place, order preserved. Returns copies of the
    // selected trajectories.
    std::vector<replay::Trajectory> process(std::vector<replay::Trajectory>& batch);

    const replay::PriorityBounds& bounds() const noexcept { return bounds_; }
    double eta_percent() const noexcept { return eta_percent_; }

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    replay::PriorityBounds bounds_;
    double eta_percent_;
    double eps_;
    numerics::Rng rng_;
};

}  // namespace cmarl::container
