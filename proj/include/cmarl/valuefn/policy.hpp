#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmarl/numerics/rng.hpp"

namespace cmarl::valuefn {

// Masked argmax; ties go to the lowest index. All-illegal masks throw ContractViolation.
int greedy_action(std::span<const double> q, std::span<const std::uint8_t> mask);

// With probability 1 - epsilon the masked argmax, else uniform over legal actions.
int epsilon_greedy(std::span<const double> q, std::span<const std::uint8_t> mask, double epsilon,
                   numerics::Rng& rng);

// p(a) proportional to exp(q_a / T) over legal actions, 0 elsewhere.
std::vector<double> boltzmann(std::span<const double> q, std::span<const std::uint8_t> mask, double temperature);

// Linear anneal from `start` to `end` over `anneal_steps`, then constant.
struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    std::uint64_t anneal_steps = 50000;

    double at(std::uint64_t step) const noexcept;
};

}  // namespace cmarl::valuefn
