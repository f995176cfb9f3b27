#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>

namespace cmarl::numerics {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Derives an independent stream seed from a base seed and a list of counters
// (container id, actor id, episode index, ...).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters) noexcept;

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> counters)
{
    return Rng{derive_seed(base, counters)};
}

// Fills with U(-bound, bound).
void fill_uniform(std::span<double> values, double bound, Rng& rng);

std::string save_rng(const Rng& rng);
void load_rng(Rng& rng, const std::string& text);

}  // namespace cmarl::numerics
