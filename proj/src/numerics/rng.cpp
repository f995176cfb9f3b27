#include "cmarl/numerics/rng.hpp"

#include <sstream>

#include "cmarl/common/error.hpp"

namespace cmarl::numerics {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters) noexcept
{
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t c : counters) {
        h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    }
    return h;
}

void fill_uniform(std::span<double> values, double bound, Rng& rng)
{
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : values) {
        v = dist(rng);
    }
}

std::string save_rng(const Rng& rng)
{
    std::ostringstream os;
    os << rng;
    return os.str();
}

void load_rng(Rng& rng, const std::string& text)
{
    std::istringstream is(text);
    is >> rng;
    if (!is) {
        throw IntegrityError("malformed generator state");
    }
}

}  // namespace cmarl::numerics
