#include "cmarl/centralizer/evaluate.hpp"

#include <algorithm>
#include <numeric>

#include "cmarl/valuefn/policy.hpp"

namespace cmarl::centralizer {

GreedyNetPolicy::GreedyNetPolicy(const numerics::ParamSet& params, const valuefn::NetDims& dims)
    : net_{params, dims}, hidden_{net_.initial_hidden(dims.n_agents)}, last_(dims.n_agents, -1)
{
}

void GreedyNetPolicy::begin_episode()
{
    hidden_ = net_.initial_hidden(net_.dims().n_agents);
    std::fill(last_.begin(), last_.end(), -1);
}

std::vector<int> GreedyNetPolicy::act(const envs::Observation& observation)
{
    const auto& d = net_.dims();
    numerics::Tensor inputs = numerics::Tensor::matrix(d.n_agents, d.input_dim());
    for (std::size_t i = 0; i < d.n_agents; ++i) {
        std::copy(observation.obs[i].begin(), observation.obs[i].end(), &inputs(i, 0));
        if (last_[i] >= 0) {
            inputs(i, d.obs_dim + static_cast<std::size_t>(last_[i])) = 1.0;
        }
    }
    auto out = net_.step(inputs, hidden_);
    hidden_ = std::move(out.hidden);
    for (std::size_t i = 0; i < d.n_agents; ++i) {
        last_[i] = valuefn::greedy_action(std::span<const double>(out.q.data() + i * d.n_actions, d.n_actions),
                                          observation.avail_actions[i]);
    }
    return last_;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

EvalStats evaluate_policy(const envs::Env& env, Policy& policy, std::size_t episodes, std::uint64_t seed)
{
    auto instance = env.clone();
    EvalStats stats;
    for (std::size_t e = 0; e < episodes; ++e) {
        auto obs = instance->reset(numerics::derive_seed(seed, {e}));
        policy.begin_episode();
        double total = 0.0;
        while (!instance->episode_over()) {
            const auto joint = policy.act(obs);
            auto step = instance->step(joint);
            total += step.reward;
            obs = envs::Observation{std::move(step.next_obs), std::move(step.next_state),
                                    std::move(step.avail_actions)};
        }
        stats.returns.push_back(total);
    }
    if (!stats.returns.empty()) {
        stats.mean = std::accumulate(stats.returns.begin(), stats.returns.end(), 0.0) /
                     static_cast<double>(stats.returns.size());
    }
    stats.median = median(stats.returns);
    return stats;
}

EvalStats evaluate_policy(const envs::Env& env, const numerics::ParamSet& params, const valuefn::NetDims& dims,
                          std::size_t episodes, std::uint64_t seed)
{
    GreedyNetPolicy policy{params, dims};
    return evaluate_policy(env, policy, episodes, seed);
}

}  // namespace cmarl::centralizer
