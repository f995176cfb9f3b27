#include "cmarl/envs/disperse.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::envs {

DisperseEnv::DisperseEnv(DisperseConfig config)
    : config_{config},
      max_need_{config.max_need > 0 ? config.max_need : static_cast<int>(config.n_agents / 2)}
{
    if (config_.n_agents < 1 || config_.n_hospitals < 1 || config_.episode_limit < 1) {
        throw ConfigError("disperse: counts must be positive");
    }
    if (max_need_ < 1) {
        max_need_ = 1;
    }
    location_.assign(config_.n_agents, 0);
}

EnvSpec DisperseEnv::spec() const
{
    const std::size_t h = config_.n_hospitals;
    return EnvSpec{config_.n_agents, h, 2 * h + 2, 2 * h + h + 1, config_.episode_limit};
}

ReturnBounds DisperseEnv::return_bounds() const
{
    return {-static_cast<double>(max_need_) * static_cast<double>(config_.episode_limit), 0.0};
}

void DisperseEnv::set_need(std::size_t hospital, int need)
{
    if (hospital >= config_.n_hospitals || need < 1) {
        throw ContractViolation("disperse: need must be positive at an existing hospital");
    }
    selected_ = hospital;
    need_ = need;
}

void DisperseEnv::draw_demand(numerics::Rng& rng)
{
    selected_ = std::uniform_int_distribution<std::size_t>(0, config_.n_hospitals - 1)(rng);
    need_ = std::uniform_int_distribution<int>(1, max_need_)(rng);
}

void DisperseEnv::reset_state(numerics::Rng& rng)
{
    std::uniform_int_distribution<std::size_t> pick(0, config_.n_hospitals - 1);
    for (auto& l : location_) {
        l = pick(rng);
    }
    draw_demand(rng);
}

Env::Transition DisperseEnv::transition(std::span<const int> joint_action, numerics::Rng& rng)
{
    int arrived = 0;
    for (std::size_t i = 0; i < config_.n_agents; ++i) {
        location_[i] = static_cast<std::size_t>(joint_action[i]);
        arrived += location_[i] == selected_ ? 1 : 0;
    }
    const double reward = punishment(need_, arrived);
    draw_demand(rng);
    return {reward, false};
}

std::vector<std::vector<double>> DisperseEnv::observations() const
{
    const double scale = max_need_;
    std::vector<std::vector<double>> obs;
    for (std::size_t i = 0; i < config_.n_agents; ++i) {
        auto o = one_hot(location_[i], config_.n_hospitals);
        o.push_back(need(location_[i]) / scale);
        const auto sel = one_hot(selected_, config_.n_hospitals);
        o.insert(o.end(), sel.begin(), sel.end());
        o.push_back(need_ / scale);
        obs.push_back(std::move(o));
    }
    return obs;
}

std::vector<double> DisperseEnv::state() const
{
    const std::size_t h = config_.n_hospitals;
    std::vector<double> s(h, 0.0);
    for (auto l : location_) {
        s[l] += 1.0 / static_cast<double>(config_.n_agents);
    }
    const auto sel = one_hot(selected_, h);
    s.insert(s.end(), sel.begin(), sel.end());
    for (std::size_t j = 0; j < h; ++j) {
        s.push_back(need(j) / static_cast<double>(max_need_));
    }
    s.push_back(need_ / static_cast<double>(max_need_));
    return s;
}

std::vector<ActionMask> DisperseEnv::avail_actions() const
{
    return std::vector<ActionMask>(config_.n_agents, ActionMask(config_.n_hospitals, 1));
}

}  // namespace cmarl::envs
