#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "cmarl/common/error.hpp"
#include "cmarl/envs/aloha.hpp"
#include "cmarl/envs/climb.hpp"
#include "cmarl/envs/disperse.hpp"
#include "cmarl/envs/gather.hpp"
#include "cmarl/envs/hallway.hpp"
#include "cmarl/envs/registry.hpp"
#include "cmarl/numerics/rng.hpp"

using namespace cmarl;
using namespace cmarl::envs;

namespace {

// Two agents, two actions, reward c on every joint action.
class ConstantGame final : public Env {
public:
    explicit ConstantGame(double c) : c_{c} {}
    std::string name() const override { return "constant"; }
    EnvSpec spec() const override { return {2, 2, 1, 1, 1}; }
    ReturnBounds return_bounds() const override { return {c_, c_}; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<ConstantGame>(*this); }

protected:
    void reset_state(numerics::Rng&) override {}
    Transition transition(std::span<const int>, numerics::Rng&) override { return {c_, true}; }
    std::vector<std::vector<double>> observations() const override { return {{0.0}, {0.0}}; }
    std::vector<double> state() const override { return {0.0}; }
    std::vector<ActionMask> avail_actions() const override { return {{1, 1}, {1, 1}}; }

private:
    double c_;
};

std::vector<int> random_legal(const std::vector<ActionMask>& masks, numerics::Rng& rng)
{
    std::vector<int> joint;
    for (const auto& m : masks) {
        std::vector<int> legal;
        for (std::size_t a = 0; a < m.size(); ++a) {
            if (m[a]) legal.push_back(static_cast<int>(a));
        }
        joint.push_back(legal[std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(rng)]);
    }
    return joint;
}

void check_spec_consistent(Env& env, std::uint64_t seed)
{
    const EnvSpec s = env.spec();
    auto o = env.reset(seed);
    numerics::Rng rng{seed + 1};
    REQUIRE(o.obs.size() == s.n_agents);
    REQUIRE(o.state.size() == s.state_dim);
    while (!env.episode_over()) {
        for (const auto& ob : o.obs) REQUIRE(ob.size() == s.obs_dim);
        for (const auto& m : o.avail_actions) {
            REQUIRE(m.size() == s.n_actions);
            REQUIRE(std::count(m.begin(), m.end(), 1) >= 1);
        }
        const auto joint = random_legal(o.avail_actions, rng);
        const StepResult r = env.step(joint);
        REQUIRE(r.next_obs.size() == s.n_agents);
        REQUIRE(r.next_state.size() == s.state_dim);
        o = Observation{r.next_obs, r.next_state, r.avail_actions};
    }
    REQUIRE(env.steps_taken() <= s.episode_limit);
}

}  // namespace

TEST_CASE("every task keeps its declared shapes over random episodes")
{
    for (const char* name : {"climb", "aloha", "disperse", "hallway", "gather"}) {
        CAPTURE(name);
        auto env = make_env({{"name", name}});
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            check_spec_consistent(*env, seed);
        }
    }
}

TEST_CASE("replaying an action sequence from the same seed reproduces rewards")
{
    for (const char* name : {"climb", "aloha", "disperse", "hallway", "gather"}) {
        CAPTURE(name);
        auto env = make_env({{"name", name}});
        for (std::uint64_t seed = 3; seed < 8; ++seed) {
            numerics::Rng pick{seed * 77};
            auto o = env->reset(seed);
            std::vector<std::vector<int>> actions;
            std::vector<double> rewards;
            while (!env->episode_over()) {
                actions.push_back(random_legal(o.avail_actions, pick));
                const auto r = env->step(actions.back());
                rewards.push_back(r.reward);
                o = Observation{r.next_obs, r.next_state, r.avail_actions};
            }
            const auto first = env->reset(seed);
            CHECK(first.obs == env->reset(seed).obs);
            for (std::size_t t = 0; t < actions.size(); ++t) {
                CHECK(env->step(actions[t]).reward == rewards[t]);
            }
            CHECK(env->episode_over());
        }
    }
}

TEST_CASE("illegal or malformed actions are contract violations")
{
    AlohaEnv aloha{AlohaConfig{.initial_backlog = 0}};
    aloha.reset(1);
    std::vector<int> sends(10, 0);
    sends[3] = 1;
    CHECK_THROWS_AS(aloha.step(sends), ContractViolation);
    CHECK_THROWS_AS(aloha.step(std::vector<int>(9, 0)), ContractViolation);
    CHECK_THROWS_AS(aloha.step(std::vector<int>(10, 2)), ContractViolation);

    ClimbEnv climb;
    climb.reset(0);
    climb.step(std::vector<int>{0, 0, 0, 0});
    CHECK_THROWS_AS(climb.step(std::vector<int>{0, 0, 0, 0}), ContractViolation);
}

TEST_CASE("aloha starts every island with one packet")
{
    AlohaEnv env;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto o = env.reset(seed);
        CHECK(std::all_of(env.backlog().begin(), env.backlog().end(), [](int b) { return b == 1; }));
        CHECK(o.obs[4][10] == doctest::Approx(0.2));
        CHECK(o.obs[4][4] == 1.0);
    }
}

TEST_CASE("aloha rewards")
{
    AlohaEnv env{AlohaConfig{.arrival_prob = 0.0}};
    REQUIRE(env.adjacent(0, 1));
    REQUIRE(env.adjacent(0, 5));
    REQUIRE_FALSE(env.adjacent(0, 6));
    REQUIRE_FALSE(env.adjacent(4, 5));

    SUBCASE("two adjacent senders each collide")
    {
        env.reset(0);
        std::vector<int> a(10, 0);
        a[0] = a[1] = 1;
        CHECK(env.step(a).reward == doctest::Approx(-20.0));
        CHECK(env.backlog()[0] == 1);
        CHECK(env.backlog()[1] == 1);
    }
    SUBCASE("isolated sender succeeds")
    {
        env.reset(0);
        std::vector<int> a(10, 0);
        a[2] = 1;
        CHECK(env.step(a).reward == doctest::Approx(0.1));
        CHECK(env.backlog()[2] == 0);
    }
    SUBCASE("a collision does not spoil a distant success")
    {
        env.reset(0);
        std::vector<int> a(10, 0);
        a[0] = a[5] = a[3] = 1;
        CHECK(env.step(a).reward == doctest::Approx(-19.9));
    }
}

TEST_CASE("aloha backlog stays within [0, 5] and arrivals follow 0.6")
{
    AlohaEnv env;
    numerics::Rng pick{11};
    long opportunities = 0;
    long arrivals = 0;
    long steps = 0;
    std::uint64_t seed = 0;
    while (steps < 100000) {
        env.reset(seed++);
        while (!env.episode_over()) {
            const auto before = env.backlog();
            // checkerboard senders never collide, so every send succeeds
            std::vector<int> a(10, 0);
            for (std::size_t i = 0; i < 10; ++i) {
                const bool black = ((i / 5) + (i % 5)) % 2 == static_cast<std::size_t>(steps % 2);
                a[i] = black && before[i] > 0 && (pick() & 1) ? 1 : 0;
            }
            env.step(a);
            ++steps;
            for (std::size_t i = 0; i < 10; ++i) {
                const int after_send = before[i] - a[i];
                REQUIRE(env.backlog()[i] >= 0);
                REQUIRE(env.backlog()[i] <= 5);
                if (after_send < 5) {
                    ++opportunities;
                    arrivals += env.backlog()[i] - after_send;
                } else {
                    REQUIRE(env.backlog()[i] == 5);
                }
            }
        }
    }
    const double rate = static_cast<double>(arrivals) / static_cast<double>(opportunities);
    CHECK(std::abs(rate - 0.6) <= 0.01);
}

TEST_CASE("climb payoff table")
{
    const std::vector<int> all{0, 0, 0, 0}, mixed{0, 1, 2, 0}, none{1, 2, 2, 1};
    CHECK(ClimbEnv::payoff(all, 0.0) == 10.0);
    CHECK(ClimbEnv::payoff(mixed, 0.0) == 0.0);
    CHECK(ClimbEnv::payoff(none, 0.0) == 5.0);
    CHECK(ClimbEnv::payoff(mixed, -5.0) == -5.0);

    ClimbEnv env;
    env.reset(0);
    const auto r = env.step(all);
    CHECK(r.reward == 10.0);
    CHECK(r.terminated);
    CHECK_FALSE(r.truncated);
}

TEST_CASE("brute force optimum")
{
    for (std::size_t n = 1; n <= 8; ++n) {
        CAPTURE(n);
        ClimbEnv env{ClimbConfig{.n_agents = n}};
        env.reset(0);
        CHECK(brute_force_optimal_return(env) == 10.0);
    }

    ConstantGame constant{-2.5};
    constant.reset(0);
    CHECK(brute_force_optimal_return(constant) == -2.5);

    DisperseEnv disperse{DisperseConfig{.n_agents = 3, .n_hospitals = 4, .episode_limit = 1}};
    disperse.reset(0);
    disperse.set_need(0, 2);
    CHECK(brute_force_optimal_return(disperse) == 0.0);

    ClimbEnv big{ClimbConfig{.n_agents = 16}};
    big.reset(0);
    CHECK_THROWS_AS(brute_force_optimal_return(big), ConfigError);
    AlohaEnv long_horizon;
    long_horizon.reset(0);
    CHECK_THROWS_AS(brute_force_optimal_return(long_horizon), ConfigError);
}

TEST_CASE("disperse demand and punishment")
{
    DisperseEnv env;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        env.reset(seed);
        int positive = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            positive += env.need(j) > 0 ? 1 : 0;
        }
        CHECK(positive == 1);
        CHECK(env.need(env.selected()) >= 1);
        CHECK(env.need(env.selected()) <= 6);
    }

    CHECK(DisperseEnv::punishment(4, 1) == -3.0);
    CHECK(DisperseEnv::punishment(2, 5) == 0.0);

    env.reset(0);
    env.set_need(2, 4);
    std::vector<int> a(12, 0);
    a[5] = 2;
    CHECK(env.step(a).reward == -3.0);
}

TEST_CASE("hallway horizon and removal rules")
{
    HallwayConfig seeded;
    seeded.layout_seed = 9;
    HallwayEnv layout{seeded};
    const auto& l = layout.lengths();
    CHECK(layout.spec().episode_limit == static_cast<std::size_t>(*std::max_element(l.begin(), l.end())) + 10);
    CHECK(std::all_of(l.begin(), l.end(), [](int x) { return x >= 4 && x <= 8; }));

    HallwayEnv env{HallwayConfig{.n_groups = 2, .group_size = 2, .lengths = {4, 4, 4, 4}}};
    std::vector<int> stay(4, 0);

    SUBCASE("group arriving together wins")
    {
        env.reset(0);
        env.set_positions({1, 1, 3, 3});
        const auto r = env.step(std::vector<int>{1, 1, 0, 0});
        CHECK(r.reward == 1.0);
        CHECK_FALSE(r.terminated);
        CHECK_FALSE(env.active(0));
        CHECK(r.avail_actions[0] == ActionMask{1, 0, 0});
    }
    SUBCASE("early arrival removes the group with no reward")
    {
        env.reset(0);
        env.set_positions({1, 2, 3, 3});
        const auto r = env.step(std::vector<int>{1, 1, 0, 0});
        CHECK(r.reward == 0.0);
        CHECK_FALSE(env.active(0));
        CHECK_FALSE(env.active(1));
        CHECK(env.active(2));
    }
    SUBCASE("two groups entering at once are held back")
    {
        env.reset(0);
        env.set_positions({1, 1, 1, 1});
        const auto r = env.step(std::vector<int>{1, 1, 1, 0});
        CHECK(r.reward == -1.0);
        CHECK(env.positions() == std::vector<int>{1, 1, 1, 1});
        CHECK(env.active(0));
    }
    SUBCASE("episode ends once every group is done")
    {
        env.reset(0);
        env.set_positions({1, 1, 2, 2});
        env.step(std::vector<int>{1, 1, 1, 1});
        const auto r = env.step(std::vector<int>{0, 0, 1, 1});
        CHECK(r.reward == 1.0);
        CHECK(r.terminated);
        CHECK_FALSE(r.truncated);
    }
}

TEST_CASE("gather rewards need everyone on a goal")
{
    GatherEnv env;
    env.reset(0);
    const Cell g0{1, 1}, g1{1, 5}, g2{5, 3};

    env.place({g0, g0, g0, g0, Cell{2, 1}}, 0);
    auto r = env.step(std::vector<int>{0, 0, 0, 0, 1});
    CHECK(r.reward == 10.0);
    CHECK(r.terminated);

    env.reset(0);
    env.place({g1, g2, g1, g2, Cell{0, 5}}, 0);
    r = env.step(std::vector<int>{0, 0, 0, 0, 2});
    CHECK(r.reward == 5.0);

    env.reset(0);
    env.place({g0, g0, g1, g0, Cell{0, 5}}, 0);
    r = env.step(std::vector<int>{0, 0, 0, 0, 2});
    CHECK(r.reward == -5.0);

    env.reset(0);
    env.place({g0, g0, g0, g0, Cell{3, 3}}, 0);
    r = env.step(std::vector<int>{0, 0, 0, 0, 0});
    CHECK(r.reward == 0.0);
    CHECK_FALSE(r.terminated);
}

TEST_CASE("gather reveals the optimal goal only to agents spawned near it")
{
    GatherEnv env;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto o = env.reset(seed);
        for (std::size_t i = 0; i < 5; ++i) {
            const double known = o.obs[i][2] + o.obs[i][3] + o.obs[i][4];
            CHECK(known == (env.informed(i) ? 1.0 : 0.0));
            if (env.informed(i)) CHECK(o.obs[i][2 + env.optimal_goal()] == 1.0);
        }
    }
}

TEST_CASE("registry rejects unknown names and parameters")
{
    CHECK_THROWS_AS(make_env({{"name", "pursuit"}}), ConfigError);
    CHECK_THROWS_AS(make_env({{"name", "climb"}, {"agents", 3}}), ConfigError);
    CHECK_THROWS_AS(make_env({{"name", "aloha"}, {"rows", "two"}}), ConfigError);
    auto env = make_env({{"name", "climb"}, {"n_agents", 3}, {"partial_reward", -5.0}});
    CHECK(env->spec().n_agents == 3);
    CHECK(env->return_bounds().low == -5.0);
}
