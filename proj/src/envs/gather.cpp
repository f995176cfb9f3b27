#include "cmarl/envs/gather.hpp"

#include <algorithm>
#include <cstdlib>

#include "cmarl/common/error.hpp"

namespace cmarl::envs {

GatherEnv::GatherEnv(GatherConfig config) : config_{config}
{
    if (config_.n_agents < 1 || config_.rows < 2 || config_.cols < 2 || config_.episode_limit < 1) {
        throw ConfigError("gather: invalid grid, agent count or limit");
    }
    for (const auto& g : config_.goals) {
        if (g.row < 0 || g.row >= config_.rows || g.col < 0 || g.col >= config_.cols) {
            throw ConfigError("gather: goal outside the grid");
        }
    }
    pos_.assign(config_.n_agents, Cell{});
    informed_.assign(config_.n_agents, 0);
}

EnvSpec GatherEnv::spec() const
{
    return EnvSpec{config_.n_agents, 5, 5, 2 * config_.n_agents + 3, config_.episode_limit};
}

ReturnBounds GatherEnv::return_bounds() const
{
    const double lo = std::min({config_.optimal_reward, config_.other_reward, config_.partial_reward, 0.0});
    const double hi = std::max({config_.optimal_reward, config_.other_reward, config_.partial_reward, 0.0});
    return {lo, hi};
}

int GatherEnv::goal_index(const Cell& c) const noexcept
{
    for (std::size_t g = 0; g < config_.goals.size(); ++g) {
        if (config_.goals[g] == c) {
            return static_cast<int>(g);
        }
    }
    return -1;
}

void GatherEnv::update_informed()
{
    const Cell& goal = config_.goals[optimal_];
    for (std::size_t i = 0; i < config_.n_agents; ++i) {
        const int d = std::abs(pos_[i].row - goal.row) + std::abs(pos_[i].col - goal.col);
        informed_[i] = d <= config_.sight_radius ? 1 : 0;
    }
}

void GatherEnv::place(const std::vector<Cell>& positions, std::size_t optimal_goal)
{
    if (positions.size() != config_.n_agents || optimal_goal >= config_.goals.size()) {
        throw ContractViolation("gather: one cell per agent and a valid goal index");
    }
    pos_ = positions;
    optimal_ = optimal_goal;
    update_informed();
}

double GatherEnv::settle_reward(const std::vector<Cell>& positions) const
{
    std::size_t on_optimal = 0;
    for (const auto& c : positions) {
        on_optimal += goal_index(c) == static_cast<int>(optimal_) ? 1 : 0;
    }
    if (on_optimal == positions.size()) {
        return config_.optimal_reward;
    }
    return on_optimal == 0 ? config_.other_reward : config_.partial_reward;
}

void GatherEnv::reset_state(numerics::Rng& rng)
{
    optimal_ = std::uniform_int_distribution<std::size_t>(0, config_.goals.size() - 1)(rng);
    std::uniform_int_distribution<int> row(0, config_.rows - 1);
    std::uniform_int_distribution<int> col(0, config_.cols - 1);
    for (auto& p : pos_) {
        do {
            p = Cell{row(rng), col(rng)};
        } while (goal_index(p) >= 0);
    }
    update_informed();
}

Env::Transition GatherEnv::transition(std::span<const int> joint_action, numerics::Rng&)
{
    static constexpr int dr[] = {0, -1, 1, 0, 0};
    static constexpr int dc[] = {0, 0, 0, -1, 1};
    for (std::size_t i = 0; i < config_.n_agents; ++i) {
        const int a = joint_action[i];
        pos_[i].row = std::clamp(pos_[i].row + dr[a], 0, config_.rows - 1);
        pos_[i].col = std::clamp(pos_[i].col + dc[a], 0, config_.cols - 1);
    }
    const bool settled = std::all_of(pos_.begin(), pos_.end(), [this](const Cell& c) { return goal_index(c) >= 0; });
    if (!settled) {
        return {0.0, false};
    }
    return {settle_reward(pos_), true};
}

std::vector<std::vector<double>> GatherEnv::observations() const
{
    std::vector<std::vector<double>> obs;
    for (std::size_t i = 0; i < config_.n_agents; ++i) {
        std::vector<double> o{static_cast<double>(pos_[i].row) / (config_.rows - 1),
                              static_cast<double>(pos_[i].col) / (config_.cols - 1)};
        const auto goal = informed_[i] ? one_hot(optimal_, 3) : std::vector<double>(3, 0.0);
        o.insert(o.end(), goal.begin(), goal.end());
        obs.push_back(std::move(o));
    }
    return obs;
}

std::vector<double> GatherEnv::state() const
{
    std::vector<double> s;
    for (const auto& p : pos_) {
        s.push_back(static_cast<double>(p.row) / (config_.rows - 1));
        s.push_back(static_cast<double>(p.col) / (config_.cols - 1));
    }
    const auto goal = one_hot(optimal_, 3);
    s.insert(s.end(), goal.begin(), goal.end());
    return s;
}

std::vector<ActionMask> GatherEnv::avail_actions() const
{
    return std::vector<ActionMask>(config_.n_agents, ActionMask(5, 1));
}

}  // namespace cmarl::envs
