#include "cmarl/envs/hallway.hpp"

#include <algorithm>

#include "cmarl/common/error.hpp"

namespace cmarl::envs {

HallwayEnv::HallwayEnv(HallwayConfig config) : config_{std::move(config)}
{
    if (config_.n_groups < 1 || config_.group_size < 1) {
        throw ConfigError("hallway: need at least one group of one agent");
    }
    if (!config_.lengths.empty()) {
        if (config_.lengths.size() != n()) {
            throw ConfigError("hallway: lengths must list one chain per agent");
        }
        lengths_ = config_.lengths;
    } else {
        if (config_.min_length < 1 || config_.max_length < config_.min_length) {
            throw ConfigError("hallway: invalid chain length range");
        }
        numerics::Rng layout{numerics::derive_seed(config_.layout_seed, {0x4a11})};
        std::uniform_int_distribution<int> draw(config_.min_length, config_.max_length);
        for (std::size_t i = 0; i < n(); ++i) {
            lengths_.push_back(draw(layout));
        }
    }
    if (*std::min_element(lengths_.begin(), lengths_.end()) < 1) {
        throw ConfigError("hallway: chain lengths must be positive");
    }
    pos_ = lengths_;
    active_.assign(n(), 1);
}

std::size_t HallwayEnv::horizon() const noexcept
{
    return static_cast<std::size_t>(*std::max_element(lengths_.begin(), lengths_.end())) + 10;
}

int HallwayEnv::obs_positions() const noexcept
{
    return std::max(config_.max_length, *std::max_element(lengths_.begin(), lengths_.end())) + 1;
}

EnvSpec HallwayEnv::spec() const
{
    const auto p = static_cast<std::size_t>(obs_positions());
    return EnvSpec{n(), 3, p + 1, 2 * n(), horizon()};
}

ReturnBounds HallwayEnv::return_bounds() const
{
    const double groups = static_cast<double>(config_.n_groups);
    return {-config_.collision_penalty * groups * static_cast<double>(horizon()), groups};
}

void HallwayEnv::set_positions(const std::vector<int>& positions)
{
    if (positions.size() != n()) {
        throw ContractViolation("hallway: one position per agent");
    }
    for (std::size_t i = 0; i < n(); ++i) {
        if (positions[i] < 1 || positions[i] > lengths_[i]) {
            throw ContractViolation("hallway: position outside its chain");
        }
    }
    pos_ = positions;
    active_.assign(n(), 1);
}

void HallwayEnv::reset_state(numerics::Rng& rng)
{
    for (std::size_t i = 0; i < n(); ++i) {
        pos_[i] = std::uniform_int_distribution<int>(1, lengths_[i])(rng);
    }
    active_.assign(n(), 1);
}

Env::Transition HallwayEnv::transition(std::span<const int> joint_action, numerics::Rng&)
{
    std::vector<int> next = pos_;
    for (std::size_t i = 0; i < n(); ++i) {
        if (!active_[i]) {
            continue;
        }
        if (joint_action[i] == 1) {
            next[i] = pos_[i] - 1;
        } else if (joint_action[i] == 2) {
            next[i] = std::min(pos_[i] + 1, lengths_[i]);
        }
    }

    std::vector<std::size_t> attempting;
    for (std::size_t g = 0; g < config_.n_groups; ++g) {
        for (std::size_t k = 0; k < config_.group_size; ++k) {
            const std::size_t i = g * config_.group_size + k;
            if (active_[i] && next[i] == 0) {
                attempting.push_back(g);
                break;
            }
        }
    }

    double reward = 0.0;
    if (attempting.size() > 1) {
        reward = -config_.collision_penalty * static_cast<double>(attempting.size());
        for (std::size_t i = 0; i < n(); ++i) {
            if (next[i] == 0 && active_[i]) {
                next[i] = pos_[i];
            }
        }
    } else if (attempting.size() == 1) {
        const std::size_t g = attempting.front();
        bool together = true;
        for (std::size_t k = 0; k < config_.group_size; ++k) {
            together = together && next[g * config_.group_size + k] == 0;
        }
        reward = together ? 1.0 : 0.0;
        for (std::size_t k = 0; k < config_.group_size; ++k) {
            active_[g * config_.group_size + k] = 0;
        }
    }
    pos_ = std::move(next);

    const bool finished = std::none_of(active_.begin(), active_.end(), [](std::uint8_t a) { return a != 0; });
    return {reward, finished};
}

std::vector<std::vector<double>> HallwayEnv::observations() const
{
    const auto p = static_cast<std::size_t>(obs_positions());
    std::vector<std::vector<double>> obs;
    for (std::size_t i = 0; i < n(); ++i) {
        auto o = one_hot(static_cast<std::size_t>(pos_[i]), p);
        o.push_back(active_[i] ? 1.0 : 0.0);
        obs.push_back(std::move(o));
    }
    return obs;
}

std::vector<double> HallwayEnv::state() const
{
    std::vector<double> s;
    for (std::size_t i = 0; i < n(); ++i) {
        s.push_back(static_cast<double>(pos_[i]) / lengths_[i]);
    }
    for (auto a : active_) {
        s.push_back(a ? 1.0 : 0.0);
    }
    return s;
}

std::vector<ActionMask> HallwayEnv::avail_actions() const
{
    std::vector<ActionMask> masks;
    for (std::size_t i = 0; i < n(); ++i) {
        masks.push_back(active_[i] ? ActionMask{1, 1, 1} : ActionMask{1, 0, 0});
    }
    return masks;
}

}  // namespace cmarl::envs
