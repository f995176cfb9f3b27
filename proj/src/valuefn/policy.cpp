#include "cmarl/valuefn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmarl/common/error.hpp"

namespace cmarl::valuefn {

namespace {

std::vector<int> legal_actions(std::span<const double> q, std::span<const std::uint8_t> mask)
{
    if (q.size() != mask.size()) {
        throw ContractViolation("q values and action mask differ in length");
    }
    std::vector<int> legal;
    for (std::size_t a = 0; a < mask.size(); ++a) {
        if (mask[a]) {
            legal.push_back(static_cast<int>(a));
        }
    }
    if (legal.empty()) {
        throw ContractViolation("action mask has no legal action");
    }
    return legal;
}

}  // namespace

int greedy_action(std::span<const double> q, std::span<const std::uint8_t> mask)
{
    const auto legal = legal_actions(q, mask);
    int best = legal.front();
    for (int a : legal) {
        if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) {
            best = a;
        }
    }
    return best;
}

int epsilon_greedy(std::span<const double> q, std::span<const std::uint8_t> mask, double epsilon, numerics::Rng& rng)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ContractViolation("epsilon must lie in [0, 1]");
    }
    const auto legal = legal_actions(q, mask);
    if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
        return legal[std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(rng)];
    }
    return greedy_action(q, mask);
}

std::vector<double> boltzmann(std::span<const double> q, std::span<const std::uint8_t> mask, double temperature)
{
    if (!(temperature > 0.0)) {
        throw ContractViolation("temperature must be positive");
    }
    const auto legal = legal_actions(q, mask);
    double top = -std::numeric_limits<double>::infinity();
    for (int a : legal) {
        top = std::max(top, q[static_cast<std::size_t>(a)]);
    }
    std::vector<double> p(q.size(), 0.0);
    double total = 0.0;
    for (int a : legal) {
        const auto i = static_cast<std::size_t>(a);
        p[i] = std::exp((q[i] - top) / temperature);
        total += p[i];
    }
    for (double& v : p) {
        v /= total;
    }
    return p;
}

double EpsilonSchedule::at(std::uint64_t step) const noexcept
{
    if (anneal_steps == 0 || step >= anneal_steps) {
        return end;
    }
    const double frac = static_cast<double>(step) / static_cast<double>(anneal_steps);
    return start + (end - start) * frac;
}

}  // namespace cmarl::valuefn
