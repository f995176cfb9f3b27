#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cmarl/numerics/rng.hpp"
#include "cmarl/numerics/serialize.hpp"
#include "cmarl/replay/trajectory.hpp"

namespace cmarl::replay {

inline constexpr double default_priority_eps = 0.01;

// clamp((return - low) / (high - low), 0, 1) + eps. Throws ConfigError unless high > low and eps > 0.
double compute_priority(double episode_return, double low, double high, double eps = default_priority_eps);
double compute_priority(const Trajectory& trajectory, double low, double high, double eps = default_priority_eps);

// Return bounds for normalization: fixed when configured, otherwise the running
// minimum and maximum of the returns seen so far.
class PriorityBounds {
public:
    PriorityBounds() = default;
    PriorityBounds(double low, double high);

    bool fixed() const noexcept { return fixed_; }
    void observe(double episode_return) noexcept;
    double low() const noexcept { return low_; }
    double high() const noexcept { return high_; }
    double priority(double episode_return, double eps = default_priority_eps) const;

    void save(numerics::ByteWriter& w) const;
    void load(numerics::ByteReader& r);

private:
    bool fixed_ = false;
    bool seen_ = false;
    double low_ = 0.0;
    double high_ = 0.0;
};

// Annotates every trajectory in place; order is preserved.
void assign_priorities(std::span<Trajectory> batch, PriorityBounds& bounds, double eps = default_priority_eps);

// Indices of ceil(eta/100 * n) entries drawn without replacement with
// probability proportional to priority, returned in ascending order.
std::vector<std::size_t> select_top_fraction(std::span<const double> priorities, double eta_percent,
                                             numerics::Rng& rng);

}  // namespace cmarl::replay
