#include <doctest.h>

#include <random>
#include <set>

#include "../support/fabricate.hpp"
#include "../support/finite_difference.hpp"
#include "cmarl/centralizer/central_learner.hpp"
#include "cmarl/centralizer/evaluate.hpp"
#include "cmarl/centralizer/receiver.hpp"
#include "cmarl/container/learner.hpp"
#include "cmarl/envs/climb.hpp"
#include "cmarl/envs/disperse.hpp"
#include "cmarl/valuefn/mixer.hpp"

using namespace cmarl;
using namespace cmarl::centralizer;
using numerics::ParamSet;

namespace {

const valuefn::NetDims tiny{2, 3, 2, 3, 8, 4};

std::vector<replay::TrajectoryPtr> fabricated_batch(std::size_t count, numerics::Rng& rng)
{
    std::vector<replay::TrajectoryPtr> out;
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(std::make_shared<replay::Trajectory>(testing::fabricate_trajectory(tiny, 3, rng)));
    }
    return out;
}

net::TrajBatch batch_of(std::uint32_t container, std::uint64_t seq, std::size_t count)
{
    net::TrajBatch b;
    b.container_id = container;
    b.batch_seq = seq;
    for (std::size_t k = 0; k < count; ++k) {
        replay::Trajectory t;
        t.uid = container * 1000 + seq * 10 + k;
        t.container_id = container;
        t.priority = 0.5;
        b.trajectories.push_back(t);
    }
    return b;
}

class GoToSelected final : public Policy {
public:
    explicit GoToSelected(std::size_t hospitals) : hospitals_{hospitals} {}
    void begin_episode() override {}
    std::vector<int> act(const envs::Observation& o) override
    {
        std::vector<int> joint;
        for (const auto& obs : o.obs) {
            int target = 0;
            for (std::size_t j = 0; j < hospitals_; ++j) {
                if (obs[hospitals_ + 1 + j] > 0.5) target = static_cast<int>(j);
            }
            joint.push_back(target);
        }
        return joint;
    }

private:
    std::size_t hospitals_;
};

class Uniform final : public Policy {
public:
    void begin_episode() override {}
    std::vector<int> act(const envs::Observation& o) override
    {
        std::vector<int> joint;
        for (const auto& mask : o.avail_actions) {
            joint.push_back(std::uniform_int_distribution<int>(0, static_cast<int>(mask.size()) - 1)(rng_));
        }
        return joint;
    }

private:
    std::mt19937_64 rng_{17};
};

}  // namespace

TEST_CASE("batches from several containers are accepted once each")
{
    ExperienceReceiver receiver;
    std::multiset<std::uint64_t> buffer;
    std::uint64_t sent = 0;
    for (std::uint64_t seq = 1; seq <= 20; ++seq) {
        for (std::uint32_t c : {0u, 1u}) {
            const std::size_t n = (seq + c) % 4 + 1;
            sent += n;
            for (const auto& t : receiver.accept(batch_of(c, seq, n))) buffer.insert(t.uid);
        }
    }
    CHECK(buffer.size() == sent);
    CHECK(receiver.total_trajectories() == sent);
    CHECK(receiver.counters().at(0).batches == 20);
    CHECK(receiver.counters().at(1).batches == 20);

    // A retry of an acknowledged batch changes nothing.
    CHECK(receiver.accept(batch_of(1, 7, 3)).empty());
    CHECK(receiver.counters().at(1).duplicates == 1);
    CHECK(receiver.total_trajectories() == sent);
    CHECK(receiver.seen(1, 7));
    CHECK_FALSE(receiver.seen(1, 21));

    numerics::ByteWriter w;
    receiver.save(w);
    ExperienceReceiver restored;
    numerics::ByteReader r{w.buffer()};
    restored.load(r);
    CHECK(restored.accept(batch_of(0, 3, 1)).empty());
    CHECK(restored.accept(batch_of(0, 21, 1)).size() == 1);
}

TEST_CASE("head registry keeps the newest head")
{
    HeadRegistry registry;
    auto rng = numerics::make_rng(1, {});
    const ParamSet a = valuefn::init_params(tiny, rng).subset(valuefn::head_prefix);
    const ParamSet b = valuefn::init_params(tiny, rng).subset(valuefn::head_prefix);
    CHECK(registry.update({2, 1, a}));
    CHECK(registry.update({2, 3, b}));
    CHECK_FALSE(registry.update({2, 2, a}));
    CHECK(registry.update({0, 1, a}));
    const auto entries = registry.entries();
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].container_id == 0);
    CHECK(entries[1].head == b);
    CHECK(entries[1].version == 3);
}

TEST_CASE("broadcasts carry increasing versions and copy the shared block exactly")
{
    auto rng = numerics::make_rng(2, {});
    valuefn::LearnerConfig config;
    config.target_interval = 3;
    CentralLearner central{tiny, container::central_initial_params(tiny, 5), config};
    CHECK_FALSE(central.make_broadcast({}).has_value());

    container::ContainerLearnerConfig cc;
    cc.n_containers = 1;
    container::ContainerLearner box{tiny, container::container_initial_params(tiny, 5, 0), cc};

    std::uint64_t last = 0;
    for (int round = 0; round < 4; ++round) {
        for (int k = 0; k < 2; ++k) {
            central.step(fabricated_batch(4, rng));
            CHECK(central.learner().target_staleness() <= config.target_interval);
        }
        auto weights = central.make_broadcast({});
        REQUIRE(weights.has_value());
        CHECK(weights->version > last);
        last = weights->version;
        CHECK_FALSE(central.make_broadcast({}).has_value());
        box.install(*weights);
        CHECK(box.learner().online().subset(valuefn::shared_prefix) ==
              central.learner().online().subset(valuefn::shared_prefix));
        box.step(fabricated_batch(4, rng));
        CHECK(box.learner().online().subset(valuefn::shared_prefix) == weights->shared);
    }

    // The target is always an exact copy of some earlier online state.
    CentralLearner c2{tiny, container::central_initial_params(tiny, 6), config};
    std::vector<ParamSet> history{c2.learner().online()};
    for (int k = 0; k < 10; ++k) {
        c2.step(fabricated_batch(2, rng));
        history.push_back(c2.learner().online());
        bool found = false;
        for (const auto& h : history) found = found || h == c2.learner().target();
        CHECK(found);
        CHECK(c2.learner().target_staleness() <= 3);
    }
}

TEST_CASE("mixing stays monotone after training")
{
    auto rng = numerics::make_rng(3, {});
    CentralLearner central{tiny, container::central_initial_params(tiny, 8), valuefn::LearnerConfig{}};
    for (int k = 0; k < 30; ++k) central.step(fabricated_batch(4, rng));
    const ParamSet& p = central.learner().online();
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> q(tiny.n_agents), s(tiny.state_dim);
        for (double& v : q) v = u(rng);
        for (double& v : s) v = u(rng);
        for (std::size_t i = 0; i < tiny.n_agents; ++i) {
            const auto fd = testing::central_differences(std::span<double>(&q[i], 1),
                                                         [&] { return valuefn::mix(q, s, p, tiny); });
            CHECK(fd[0] >= -1e-9);
        }
    }
}

TEST_CASE("evaluation")
{
    envs::DisperseEnv disperse;
    GoToSelected best{4};
    const auto stats = evaluate_policy(disperse, best, 20, 3);
    CHECK(stats.returns.size() == 20);
    for (double r : stats.returns) CHECK(r == 0.0);

    envs::ClimbEnv climb;
    Uniform random;
    CHECK(evaluate_policy(climb, random, 200, 1).mean < 5.0);

    const auto dims = valuefn::NetDims::from_spec(disperse.spec(), 16, 8);
    auto rng = numerics::make_rng(4, {});
    const ParamSet params = valuefn::init_params(dims, rng);
    const auto a = evaluate_policy(disperse, params, dims, 10, 42);
    const auto b = evaluate_policy(disperse, params, dims, 10, 42);
    CHECK(a.returns == b.returns);
    CHECK(a.mean == b.mean);
    CHECK(median({3.0, 1.0, 2.0, 10.0}) == 2.5);
}
