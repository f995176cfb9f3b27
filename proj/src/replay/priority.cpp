#include "cmarl/replay/priority.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmarl/common/error.hpp"

namespace cmarl::replay {

double compute_priority(double episode_return, double low, double high, double eps)
{
    if (!(high > low)) {
        throw ConfigError("priority bounds need high > low, got [" + std::to_string(low) + ", " +
                          std::to_string(high) + "]");
    }
    if (!(eps > 0.0)) {
        throw ConfigError("priority eps must be positive");
    }
    return std::clamp((episode_return - low) / (high - low), 0.0, 1.0) + eps;
}

double compute_priority(const Trajectory& trajectory, double low, double high, double eps)
{
    return compute_priority(trajectory.total_reward(), low, high, eps);
}

PriorityBounds::PriorityBounds(double low, double high) : fixed_{true}, seen_{true}, low_{low}, high_{high}
{
    if (!(high > low)) {
        throw ConfigError("priority bounds need high > low");
    }
}

void PriorityBounds::observe(double episode_return) noexcept
{
    if (fixed_) {
        return;
    }
    if (!seen_) {
        low_ = high_ = episode_return;
        seen_ = true;
        return;
    }
    low_ = std::min(low_, episode_return);
    high_ = std::max(high_, episode_return);
}

double PriorityBounds::priority(double episode_return, double eps) const
{
    if (!fixed_ && !(high_ > low_)) {
        // Too few distinct returns to normalize; every episode is equally likely.
        return compute_priority(0.0, -1.0, 1.0, eps);
    }
    return compute_priority(episode_return, low_, high_, eps);
}

void PriorityBounds::save(numerics::ByteWriter& w) const
{
    w.u8(fixed_ ? 1 : 0);
    w.u8(seen_ ? 1 : 0);
    w.f64(low_);
    w.f64(high_);
}

void PriorityBounds::load(numerics::ByteReader& r)
{
    fixed_ = r.u8() != 0;
    seen_ = r.u8() != 0;
    low_ = r.f64();
    high_ = r.f64();
}

void assign_priorities(std::span<Trajectory> batch, PriorityBounds& bounds, double eps)
{
    for (Trajectory& t : batch) {
        bounds.observe(t.total_reward());
    }
    for (Trajectory& t : batch) {
        t.priority = bounds.priority(t.total_reward(), eps);
    }
}

std::vector<std::size_t> select_top_fraction(std::span<const double> priorities, double eta_percent,
                                             numerics::Rng& rng)
{
    if (!(eta_percent > 0.0 && eta_percent <= 100.0)) {
        throw ConfigError("eta_percent must lie in (0, 100]");
    }
    const std::size_t n = priorities.size();
    const auto k = std::min(n, static_cast<std::size_t>(std::ceil(eta_percent * static_cast<double>(n) / 100.0 - 1e-9)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (k == n) {
        return idx;
    }
    // Exponential keys log(u) / w: the k largest form a draw without replacement
    // proportional to w.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(priorities[i] > 0.0)) {
            throw ContractViolation("priorities must be positive");
        }
        double v = u(rng);
        while (v <= 0.0) {
            v = u(rng);
        }
        key[i] = std::log(v) / priorities[i];
    }
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace cmarl::replay
