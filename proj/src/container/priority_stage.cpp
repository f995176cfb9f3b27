#include "cmarl/container/priority_stage.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::container {

InitialPriorityStage::InitialPriorityStage(replay::PriorityBounds bounds, double eta_percent, double eps,
                                           numerics::Rng rng)
    : bounds_{bounds}, eta_percent_{eta_percent}, eps_{eps}, rng_{std::move(rng)}
{
    if (!(eta_percent > 0.0 && eta_percent <= 100.0)) {
        throw ConfigError("eta_percent must lie in (0, 100], got " + std::to_string(eta_percent));
    }
    if (!(eps > 0.0)) {
        throw ConfigError("priority eps must be positive");
    }
}

std::vector<replay::Trajectory> InitialPriorityStage::process(std::vector<replay::Trajectory>& batch)
{
    if (batch.empty()) {
        return {};
    }
    replay::assign_priorities(batch, bounds_, eps_);
    std::vector<double> priorities;
    priorities.reserve(batch.size());
    for (const auto& t : batch) {
        priorities.push_back(t.priority);
    }
    std::vector<replay::Trajectory> selected;
    for (const std::size_t i : replay::select_top_fraction(priorities, eta_percent_, rng_)) {
        selected.push_back(batch[i]);
    }
    return selected;
}

void InitialPriorityStage::save(numerics::ByteWriter& w) const
{
    bounds_.save(w);
    w.str(numerics::save_rng(rng_));
}

void InitialPriorityStage::load(numerics::ByteReader& r)
{
    bounds_.load(r);
    numerics::load_rng(rng_, r.str());
}

}  // namespace cmarl::container
