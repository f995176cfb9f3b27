#include "cmarl/envs/aloha.hpp"

#include <cstdlib>

#include "cmarl/common/error.hpp"

namespace cmarl::envs {

AlohaEnv::AlohaEnv(AlohaConfig config) : config_{config}
{
    if (n() < 1 || config_.max_backlog < 1 || config_.initial_backlog < 0 ||
        config_.initial_backlog > config_.max_backlog || config_.episode_limit < 1) {
        throw ConfigError("aloha: invalid grid, backlog or limit");
    }
    if (config_.arrival_prob < 0.0 || config_.arrival_prob > 1.0) {
        throw ConfigError("aloha: arrival_prob must lie in [0, 1]");
    }
    backlog_.assign(n(), config_.initial_backlog);
}

EnvSpec AlohaEnv::spec() const
{
    return EnvSpec{n(), 2, n() + 1, n(), config_.episode_limit};
}

bool AlohaEnv::adjacent(std::size_t a, std::size_t b) const noexcept
{
    const auto ra = static_cast<long>(a / config_.cols), ca = static_cast<long>(a % config_.cols);
    const auto rb = static_cast<long>(b / config_.cols), cb = static_cast<long>(b % config_.cols);
    return std::labs(ra - rb) + std::labs(ca - cb) == 1;
}

void AlohaEnv::reset_state(numerics::Rng&)
{
    backlog_.assign(n(), config_.initial_backlog);
}

Env::Transition AlohaEnv::transition(std::span<const int> joint_action, numerics::Rng& rng)
{
    double reward = 0.0;
    std::vector<int> next = backlog_;
    for (std::size_t i = 0; i < n(); ++i) {
        if (joint_action[i] != 1) {
            continue;
        }
        bool collided = false;
        for (std::size_t j = 0; j < n() && !collided; ++j) {
            collided = j != i && joint_action[j] == 1 && adjacent(i, j);
        }
        if (collided) {
            reward += config_.collision_reward;
        } else {
            reward += config_.success_reward;
            --next[i];
        }
    }
    std::bernoulli_distribution arrival(config_.arrival_prob);
    for (int& b : next) {
        if (b < config_.max_backlog && arrival(rng)) {
            ++b;
        }
    }
    backlog_ = std::move(next);
    return {reward, false};
}

std::vector<std::vector<double>> AlohaEnv::observations() const
{
    std::vector<std::vector<double>> obs;
    for (std::size_t i = 0; i < n(); ++i) {
        auto o = one_hot(i, n());
        o.push_back(static_cast<double>(backlog_[i]) / config_.max_backlog);
        obs.push_back(std::move(o));
    }
    return obs;
}

std::vector<double> AlohaEnv::state() const
{
    std::vector<double> s;
    for (int b : backlog_) {
        s.push_back(static_cast<double>(b) / config_.max_backlog);
    }
    return s;
}

std::vector<ActionMask> AlohaEnv::avail_actions() const
{
    std::vector<ActionMask> masks;
    for (int b : backlog_) {
        masks.push_back(ActionMask{1, static_cast<std::uint8_t>(b > 0 ? 1 : 0)});
    }
    return masks;
}

}  // namespace cmarl::envs
