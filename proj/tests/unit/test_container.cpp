#include <doctest.h>

#include <cmath>
#include <set>

#include "../support/fabricate.hpp"
#include "../support/queue_fabric.hpp"
#include "cmarl/common/error.hpp"
#include "cmarl/container/actor.hpp"
#include "cmarl/container/buffer_manager.hpp"
#include "cmarl/container/learner.hpp"
#include "cmarl/container/priority_stage.hpp"
#include "cmarl/envs/aloha.hpp"
#include "cmarl/envs/climb.hpp"
#include "cmarl/valuefn/divergence.hpp"

using namespace cmarl;
using namespace cmarl::container;
using numerics::ParamSet;

namespace {

valuefn::NetDims small_dims(const envs::Env& env)
{
    return valuefn::NetDims::from_spec(env.spec(), 16, 8);
}

replay::Trajectory with_uid(std::uint64_t uid)
{
    replay::Trajectory t;
    t.uid = uid;
    return t;
}

}  // namespace

TEST_CASE("greedy actor on a deterministic game repeats its episode")
{
    Actor actor{0, 0, 11, std::make_unique<envs::ClimbEnv>()};
    const auto dims = small_dims(actor.env());
    auto rng = numerics::make_rng(1, {});
    const valuefn::ActingNet net{valuefn::init_params(dims, rng), dims};
    const auto first = actor.run_episode(net, 0.0);
    for (int e = 0; e < 5; ++e) {
        const auto again = actor.run_episode(net, 0.0);
        CHECK(again.actions == first.actions);
        CHECK(again.rewards == first.rewards);
        CHECK(again.uid != first.uid);
    }
    CHECK(actor.episodes() == 6);
    CHECK(actor.steps() == 6);
    CHECK(first.well_formed());
}

TEST_CASE("actors draw from separate streams")
{
    Actor a{0, 0, 5, std::make_unique<envs::AlohaEnv>()};
    Actor b{0, 1, 5, std::make_unique<envs::AlohaEnv>()};
    const auto dims = small_dims(a.env());
    auto rng = numerics::make_rng(2, {});
    const valuefn::ActingNet net{valuefn::init_params(dims, rng), dims};
    const auto ta = a.run_episode(net, 1.0);
    const auto tb = b.run_episode(net, 1.0);
    CHECK(ta.actions != tb.actions);
    CHECK(trajectory_uid(0, 0, 0) != trajectory_uid(0, 1, 0));
    CHECK(trajectory_uid(1, 0, 0) != trajectory_uid(0, 0, 0));

    Actor replay_a{0, 0, 5, std::make_unique<envs::AlohaEnv>()};
    CHECK(replay_a.run_episode(net, 1.0) == ta);
}

TEST_CASE("actor state survives save and load")
{
    Actor a{2, 3, 8, std::make_unique<envs::AlohaEnv>()};
    const auto dims = small_dims(a.env());
    auto rng = numerics::make_rng(3, {});
    const valuefn::ActingNet net{valuefn::init_params(dims, rng), dims};
    a.run_episode(net, 0.5);
    numerics::ByteWriter w;
    a.save(w);
    const auto next = a.run_episode(net, 0.5);

    Actor b{2, 3, 8, std::make_unique<envs::AlohaEnv>()};
    numerics::ByteReader r{w.buffer()};
    b.load(r);
    CHECK(b.run_episode(net, 0.5) == next);
}

TEST_CASE("queue manager without a request only gathers")
{
    ActorQueue q1{8}, q2{8};
    SharedSignal signal;
    MultiQueueManager manager{{&q1, &q2}, signal};
    for (int k = 0; k < 5; ++k) {
        q1.push(with_uid(10 + k));
        q2.push(with_uid(20 + k));
        CHECK_FALSE(manager.poll().has_value());
    }
    CHECK(q1.size() == 0);
    CHECK(q2.size() == 0);
    CHECK(manager.accumulated() == 10);
    CHECK(manager.counters().forwarded == 0);
}

TEST_CASE("a request compacts everything gathered into one batch")
{
    ActorQueue q1{8}, q2{8};
    SharedSignal signal;
    MultiQueueManager manager{{&q1, &q2}, signal};
    for (int k = 0; k < 4; ++k) q1.push(with_uid(1 + k));
    for (int k = 0; k < 3; ++k) q2.push(with_uid(100 + k));
    signal.raise();
    auto batch = manager.poll();
    REQUIRE(batch.has_value());
    CHECK(batch->size() == 7);
    CHECK_FALSE(signal.raised());
    CHECK(manager.accumulated() == 0);
    CHECK_FALSE(manager.poll().has_value());

    // A raised flag with nothing gathered stays raised until something arrives.
    signal.raise();
    CHECK_FALSE(manager.poll().has_value());
    CHECK(signal.raised());
    q2.push(with_uid(7));
    auto next = manager.poll();
    REQUIRE(next.has_value());
    CHECK(next->size() == 1);
}

TEST_CASE("full actor queues drop their oldest episode")
{
    ActorQueue q{3};
    for (std::uint64_t k = 1; k <= 5; ++k) {
        CHECK(q.push(with_uid(k)) == (k > 3));
    }
    CHECK(q.dropped() == 2);
    CHECK(q.try_pop()->uid == 3);
}

TEST_CASE("random interleavings forward every episode exactly once")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto tally = testing::run_queue_fabric(4, 3, 1000, seed, false);
        CHECK(tally.reconciles());
        CHECK(tally.duplicates == 0);
        CHECK(tally.strays == 0);
        CHECK(tally.queued == 0);
        CHECK(tally.empty_batches == 0);
        const auto drained = testing::run_queue_fabric(4, 3, 1000, seed, true);
        CHECK(drained.generated == drained.forwarded + drained.dropped);
        CHECK(drained.duplicates == 0);
    }
}

TEST_CASE("initial priorities follow the formula elementwise")
{
    InitialPriorityStage stage{replay::PriorityBounds{0.0, 10.0}, 50.0, 0.01, numerics::make_rng(1, {})};
    std::vector<replay::Trajectory> empty;
    CHECK(stage.process(empty).empty());

    std::vector<replay::Trajectory> ends(2);
    ends[0].rewards = {0.0};
    ends[1].rewards = {10.0};
    stage.process(ends);
    CHECK(ends[0].priority == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(ends[1].priority == doctest::Approx(1.01).epsilon(1e-15));

    envs::AlohaEnv env;
    Actor actor{0, 0, 4, std::make_unique<envs::AlohaEnv>()};
    const auto dims = small_dims(env);
    auto rng = numerics::make_rng(5, {});
    const valuefn::ActingNet net{valuefn::init_params(dims, rng), dims};
    std::vector<replay::Trajectory> batch;
    for (int e = 0; e < 9; ++e) batch.push_back(actor.run_episode(net, 1.0));
    const auto uids = [&] {
        std::vector<std::uint64_t> u;
        for (const auto& t : batch) u.push_back(t.uid);
        return u;
    }();
    const auto bounds = env.return_bounds();
    InitialPriorityStage aloha{replay::PriorityBounds{bounds.low, bounds.high}, 50.0, 0.01, numerics::make_rng(2, {})};
    const auto transfer = aloha.process(batch);
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const double ret = batch[k].total_reward();
        const double oracle = std::clamp((ret - bounds.low) / (bounds.high - bounds.low), 0.0, 1.0) + 0.01;
        CHECK(batch[k].priority == oracle);
        CHECK(batch[k].uid == uids[k]);
    }
    CHECK(transfer.size() == 5);
    std::set<std::uint64_t> distinct;
    for (const auto& t : transfer) distinct.insert(t.uid);
    CHECK(distinct.size() == 5);

    CHECK_THROWS_AS(InitialPriorityStage(replay::PriorityBounds{}, 0.0, 0.01, numerics::make_rng(1, {})),
                    ConfigError);
    CHECK_THROWS_AS(InitialPriorityStage(replay::PriorityBounds{}, 101.0, 0.01, numerics::make_rng(1, {})),
                    ConfigError);
}

TEST_CASE("buffer manager waits for enough episodes and reloads exactly")
{
    SharedSignal signal;
    BufferManager manager{8, 4, 3, signal, numerics::make_rng(9, {})};
    manager.request();
    CHECK(signal.raised());
    auto rng = numerics::make_rng(4, {});
    const valuefn::NetDims dims{2, 3, 2, 3, 8, 4};
    std::vector<replay::Trajectory> batch;
    for (int k = 0; k < 2; ++k) {
        batch.push_back(testing::fabricate_trajectory(dims, 2, rng));
        batch.back().priority = 0.5 + k;
        batch.back().uid = 1 + k;
    }
    manager.insert(batch);
    CHECK(manager.sample().empty());
    for (int k = 0; k < 9; ++k) {
        batch = {testing::fabricate_trajectory(dims, 3, rng)};
        batch.back().priority = 0.1 * (k + 1);
        batch.back().uid = 10 + k;
        manager.insert(batch);
    }
    CHECK(manager.buffer().size() == 8);

    numerics::ByteWriter w;
    manager.save(w);
    SharedSignal other_signal;
    BufferManager copy{8, 4, 3, other_signal, numerics::make_rng(0, {})};
    numerics::ByteReader r{w.buffer()};
    copy.load(r);
    CHECK(r.done());
    for (int round = 0; round < 5; ++round) {
        const auto a = manager.sample();
        const auto b = copy.sample();
        REQUIRE(a.size() == 4);
        REQUIRE(b.size() == 4);
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(*a[k] == *b[k]);
        }
    }
    BufferManager wrong{9, 4, 3, other_signal, numerics::make_rng(0, {})};
    numerics::ByteReader again{w.buffer()};
    CHECK_THROWS_AS(wrong.load(again), IntegrityError);
}

TEST_CASE("containers start from the central shared block with their own heads")
{
    const valuefn::NetDims dims{3, 4, 5, 6, 8, 4};
    const auto central = central_initial_params(dims, 7);
    const auto c0 = container_initial_params(dims, 7, 0);
    const auto c1 = container_initial_params(dims, 7, 1);
    CHECK(c0.subset(valuefn::shared_prefix) == central.subset(valuefn::shared_prefix));
    CHECK(c1.subset(valuefn::shared_prefix) == central.subset(valuefn::shared_prefix));
    CHECK(c0.subset(valuefn::mixer_prefix) == central.subset(valuefn::mixer_prefix));
    CHECK_FALSE(c0.subset(valuefn::head_prefix) == c1.subset(valuefn::head_prefix));
}

TEST_CASE("container learning leaves the broadcast shared block untouched")
{
    const valuefn::NetDims dims{2, 3, 2, 3, 8, 4};
    ContainerLearnerConfig config;
    config.container_id = 1;
    config.n_containers = 3;
    config.learner.loss.diversity = true;
    ContainerLearner learner{dims, container_initial_params(dims, 3, 1), config};

    auto rng = numerics::make_rng(6, {});
    std::vector<replay::TrajectoryPtr> batch;
    for (int k = 0; k < 4; ++k) {
        batch.push_back(std::make_shared<replay::Trajectory>(testing::fabricate_trajectory(dims, 3, rng)));
    }

    // Before any broadcast there are no sibling heads: the diversity term is off.
    const auto first = learner.step(batch);
    CHECK_FALSE(first.diversity_active);
    CHECK(learner.fallback_steps() == 1);

    net::Weights weights;
    weights.version = 4;
    auto other = numerics::make_rng(99, {});
    const ParamSet fresh = valuefn::init_params(dims, other);
    weights.shared = fresh.subset(valuefn::shared_prefix);
    weights.central_head = fresh.subset(valuefn::head_prefix);
    for (std::uint32_t id : {0u, 1u, 2u}) {
        weights.heads.push_back(net::HeadEntry{id, 1, container_initial_params(dims, 3, id).subset(valuefn::head_prefix)});
    }
    learner.install(weights);
    CHECK(learner.weights_version() == 4);
    CHECK(learner.sibling_count() == 2);
    for (int k = 0; k < 5; ++k) {
        const auto result = learner.step(batch);
        CHECK(result.diversity_active);
        CHECK(result.kl_mean >= 0.0);
    }
    CHECK(learner.learner().online().subset(valuefn::shared_prefix) == weights.shared);
    CHECK(learner.learner().target().subset(valuefn::shared_prefix) == weights.shared);
    CHECK_FALSE(learner.head() == container_initial_params(dims, 3, 1).subset(valuefn::head_prefix));
    CHECK(learner.acting_params() == learner.learner().online());

    numerics::ByteWriter w;
    learner.save(w);
    ContainerLearner restored{dims, container_initial_params(dims, 3, 1), config};
    numerics::ByteReader r{w.buffer()};
    restored.load(r);
    CHECK(r.done());
    const auto x = learner.step(batch);
    const auto y = restored.step(batch);
    CHECK(x.total == y.total);
    CHECK(learner.learner().online() == restored.learner().online());
}

TEST_CASE("a following container acts with the broadcast central policy")
{
    const valuefn::NetDims dims{2, 3, 2, 3, 8, 4};
    ContainerLearnerConfig config;
    config.container_id = 0;
    config.n_containers = 2;
    config.follow_central = true;
    config.learner.loss.diversity = true;
    config.learner.loss.beta = 0.0;
    ContainerLearner learner{dims, container_initial_params(dims, 3, 0), config};

    net::Weights weights;
    weights.version = 1;
    auto other = numerics::make_rng(5, {});
    const ParamSet central = valuefn::init_params(dims, other);
    weights.shared = central.subset(valuefn::shared_prefix);
    weights.central_head = central.subset(valuefn::head_prefix);
    learner.install(weights);
    CHECK(learner.head() == weights.central_head);

    auto rng = numerics::make_rng(6, {});
    std::vector<replay::TrajectoryPtr> batch{
        std::make_shared<replay::Trajectory>(testing::fabricate_trajectory(dims, 3, rng))};
    const auto result = learner.step(batch);
    CHECK_FALSE(result.diversity_active);
    CHECK(result.total == doctest::Approx(result.td).epsilon(1e-15));
    CHECK(learner.acting_params().subset(valuefn::head_prefix) == weights.central_head);
    CHECK(learner.acting_params().subset(valuefn::shared_prefix) == weights.shared);
}

TEST_CASE("inter-container divergence")
{
    const valuefn::NetDims dims{2, 3, 2, 3, 8, 4};
    auto rng = numerics::make_rng(8, {});
    const ParamSet base = valuefn::init_params(dims, rng);
    std::vector<const replay::Trajectory*> rows;
    std::vector<replay::Trajectory> store;
    for (int k = 0; k < 3; ++k) store.push_back(testing::fabricate_trajectory(dims, 4, rng));
    for (const auto& t : store) rows.push_back(&t);

    const ParamSet head = base.subset(valuefn::head_prefix);
    const std::vector<ParamSet> same{head, head, head};
    CHECK(std::abs(valuefn::policy_divergence(base, same, dims, rows, 1.0)) < 1e-12);
    CHECK(valuefn::policy_divergence(base, std::vector<ParamSet>{head}, dims, rows, 1.0) == 0.0);

    std::vector<ParamSet> different;
    for (std::uint64_t s : {1u, 2u}) {
        auto r = numerics::make_rng(s, {});
        different.push_back(valuefn::init_params(dims, r).subset(valuefn::head_prefix));
    }
    const double d = valuefn::policy_divergence(base, different, dims, rows, 1.0);
    CHECK(d > 0.0);

    // Matches the diversity term of the loss for the first head against the second.
    ParamSet online = base;
    online.assign(different[0]);
    valuefn::LossConfig loss;
    loss.diversity = true;
    const std::vector<ParamSet> siblings{different[1]};
    const auto kl0 = valuefn::qmix_loss(online, online, dims, rows, loss, valuefn::Trainable::head_and_mixer, siblings);
    ParamSet online1 = base;
    online1.assign(different[1]);
    const std::vector<ParamSet> siblings1{different[0]};
    const auto kl1 =
        valuefn::qmix_loss(online1, online1, dims, rows, loss, valuefn::Trainable::head_and_mixer, siblings1);
    CHECK(d == doctest::Approx((kl0.kl_mean + kl1.kl_mean) / 2.0).epsilon(1e-10));
}
