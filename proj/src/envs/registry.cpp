#include "cmarl/envs/registry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "cmarl/common/error.hpp"
#include "cmarl/envs/aloha.hpp"
#include "cmarl/envs/climb.hpp"
#include "cmarl/envs/disperse.hpp"
#include "cmarl/envs/gather.hpp"
#include "cmarl/envs/hallway.hpp"

namespace cmarl::envs {
namespace {

class Fields {
public:
    explicit Fields(const nlohmann::json& j) : j_{j}
    {
        if (!j_.is_object()) {
            throw ConfigError("env config must be an object");
        }
    }

    template <typename T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("env.") + key + ": " + e.what());
        }
    }

    void finish(const std::string& env) const
    {
        for (const auto& [key, value] : j_.items()) {
            if (key != "name" && !seen_.count(key)) {
                throw ConfigError(env + ": unknown parameter '" + key + "'");
            }
        }
    }

private:
    const nlohmann::json& j_;
    std::set<std::string> seen_;
};

std::unique_ptr<Env> make_climb(Fields& f)
{
    ClimbConfig c;
    f.read("n_agents", c.n_agents);
    f.read("partial_reward", c.partial_reward);
    f.finish("climb");
    return std::make_unique<ClimbEnv>(c);
}

std::unique_ptr<Env> make_aloha(Fields& f)
{
    AlohaConfig c;
    f.read("rows", c.rows);
    f.read("cols", c.cols);
    f.read("episode_limit", c.episode_limit);
    f.read("max_backlog", c.max_backlog);
    f.read("initial_backlog", c.initial_backlog);
    f.read("arrival_prob", c.arrival_prob);
    f.read("success_reward", c.success_reward);
    f.read("collision_reward", c.collision_reward);
    f.read("return_low", c.bounds.low);
    f.read("return_high", c.bounds.high);
    f.finish("aloha");
    return std::make_unique<AlohaEnv>(c);
}

std::unique_ptr<Env> make_disperse(Fields& f)
{
    DisperseConfig c;
    f.read("n_agents", c.n_agents);
    f.read("n_hospitals", c.n_hospitals);
    f.read("episode_limit", c.episode_limit);
    f.read("max_need", c.max_need);
    f.finish("disperse");
    return std::make_unique<DisperseEnv>(c);
}

std::unique_ptr<Env> make_hallway(Fields& f)
{
    HallwayConfig c;
    f.read("n_groups", c.n_groups);
    f.read("group_size", c.group_size);
    f.read("min_length", c.min_length);
    f.read("max_length", c.max_length);
    f.read("layout_seed", c.layout_seed);
    f.read("lengths", c.lengths);
    f.read("collision_penalty", c.collision_penalty);
    f.finish("hallway");
    return std::make_unique<HallwayEnv>(c);
}

std::unique_ptr<Env> make_gather(Fields& f)
{
    GatherConfig c;
    std::vector<std::array<int, 2>> goals;
    f.read("n_agents", c.n_agents);
    f.read("rows", c.rows);
    f.read("cols", c.cols);
    f.read("goals", goals);
    f.read("episode_limit", c.episode_limit);
    f.read("sight_radius", c.sight_radius);
    f.read("optimal_reward", c.optimal_reward);
    f.read("other_reward", c.other_reward);
    f.read("partial_reward", c.partial_reward);
    f.finish("gather");
    if (!goals.empty()) {
        if (goals.size() != c.goals.size()) {
            throw ConfigError("gather: exactly three goals");
        }
        for (std::size_t g = 0; g < goals.size(); ++g) {
            c.goals[g] = Cell{goals[g][0], goals[g][1]};
        }
    }
    return std::make_unique<GatherEnv>(c);
}

}  // namespace

std::unique_ptr<Env> make_env(const nlohmann::json& config)
{
    Fields f{config};
    if (!config.contains("name") || !config.at("name").is_string()) {
        throw ConfigError("env config needs a string 'name'");
    }
    const auto name = config.at("name").get<std::string>();
    if (name == "climb") return make_climb(f);
    if (name == "aloha") return make_aloha(f);
    if (name == "disperse") return make_disperse(f);
    if (name == "hallway") return make_hallway(f);
    if (name == "gather") return make_gather(f);
    throw ConfigError("unknown env '" + name + "'");
}

double brute_force_optimal_return(const Env& env)
{
    constexpr double max_joint = 1e7;
    constexpr double max_leaves = 1e8;
    constexpr std::size_t max_horizon = 3;

    if (env.episode_over()) {
        return 0.0;
    }
    const EnvSpec s = env.spec();
    const std::size_t horizon = s.episode_limit - env.steps_taken();
    if (horizon > max_horizon) {
        throw ConfigError("brute force: horizon " + std::to_string(horizon) + " exceeds " +
                          std::to_string(max_horizon));
    }
    const double per_step = std::pow(static_cast<double>(s.n_actions), static_cast<double>(s.n_agents));
    if (per_step > max_joint || std::pow(per_step, static_cast<double>(horizon)) > max_leaves) {
        throw ConfigError("brute force: joint action space too large to enumerate");
    }

    std::function<double(const Env&)> best_from = [&](const Env& from) -> double {
        const auto masks = from.observe().avail_actions;
        std::vector<std::vector<int>> legal(s.n_agents);
        for (std::size_t i = 0; i < s.n_agents; ++i) {
            for (std::size_t a = 0; a < s.n_actions; ++a) {
                if (masks[i][a]) {
                    legal[i].push_back(static_cast<int>(a));
                }
            }
        }
        std::vector<std::size_t> idx(s.n_agents, 0);
        std::vector<int> joint(s.n_agents);
        double best = -std::numeric_limits<double>::infinity();
        while (true) {
            for (std::size_t i = 0; i < s.n_agents; ++i) {
                joint[i] = legal[i][idx[i]];
            }
            auto next = from.clone();
            const StepResult r = next->step(joint);
            best = std::max(best, r.reward + (r.terminated ? 0.0 : best_from(*next)));

            std::size_t k = 0;
            while (k < s.n_agents && ++idx[k] == legal[k].size()) {
                idx[k++] = 0;
            }
            if (k == s.n_agents) {
                break;
            }
        }
        return best;
    };
    return best_from(env);
}

}  // namespace cmarl::envs
