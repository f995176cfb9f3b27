#include "cmarl/container/runtime.hpp"

#include <deque>

#include "cmarl/common/log.hpp"
#include "cmarl/net/socket.hpp"

namespace cmarl::container {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t unbounded = std::size_t{1} << 30;

void nap() { std::this_thread::sleep_for(std::chrono::milliseconds(1)); }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

}  // namespace

ContainerRuntime::ContainerRuntime(const ContainerConfig& config, RuntimeOptions options)
    : config_{config},
      options_{options},
      core_{config},
      inbox_{unbounded},
      outbox_{unbounded},
      feed_{options.feed_capacity == 0 ? 1 : options.feed_capacity},
      latencies_(config.k_actors)
{
}

ContainerRuntime::~ContainerRuntime() { stop(); }

void ContainerRuntime::start()
{
    if (!threads_.empty()) {
        return;
    }
    stopping_ = false;
    for (std::size_t a = 0; a < core_.actors().size(); ++a) {
        threads_.emplace_back([this, a] { actor_loop(a); });
    }
    threads_.emplace_back([this] { gather_loop(); });
    threads_.emplace_back([this] { buffer_loop(); });
    if (options_.learner) {
        threads_.emplace_back([this] { learner_loop(); });
    }
    threads_.emplace_back([this] { link_loop(); });
}

void ContainerRuntime::stop()
{
    stopping_ = true;
    for (auto& t : threads_) {
        if (t.joinable()) {
            t.join();
        }
    }
    threads_.clear();
}

void ContainerRuntime::actor_loop(std::size_t index)
{
    auto& actor = *core_.actors()[index];
    auto& queue = *core_.queues()[index];
    auto& samples = latencies_[index];
    while (!stopping_) {
        const auto net = core_.snapshot().get();
        auto trajectory = actor.run_episode(*net, core_.epsilon());
        const auto length = trajectory.length;
        if (options_.record_latency) {
            const auto t0 = Clock::now();
            queue.push(std::move(trajectory));
            samples.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        } else {
            queue.push(std::move(trajectory));
        }
        core_.count_episode(length);
    }
}

void ContainerRuntime::gather_loop()
{
    while (!stopping_) {
        std::optional<std::pair<std::vector<replay::Trajectory>, std::vector<replay::Trajectory>>> gathered;
        {
            std::lock_guard lock{gather_mutex_};
            gathered = core_.gather();
        }
        if (!gathered) {
            nap();
            continue;
        }
        if (!gathered->second.empty()) {
            outbox_.push(std::move(gathered->second));
        }
        inbox_.push(std::move(gathered->first));
    }
}

void ContainerRuntime::buffer_loop()
{
    std::vector<std::vector<replay::Trajectory>> arrived;
    while (!stopping_) {
        bool idle = true;
        arrived.clear();
        inbox_.drain_into(arrived);
        if (arrived.empty()) {
            core_.buffer().request();
        } else {
            std::lock_guard lock{buffer_mutex_};
            for (auto& batch : arrived) {
                core_.buffer().insert(std::move(batch));
            }
            idle = false;
        }
        if (options_.learner && feed_.size() < feed_.capacity()) {
            std::vector<replay::TrajectoryPtr> batch;
            {
                std::lock_guard lock{buffer_mutex_};
                batch = core_.buffer().sample();
            }
            if (!batch.empty()) {
                feed_.push(std::move(batch));
                ++samples_;
                idle = false;
            }
        }
        if (idle) {
            nap();
        }
    }
}

void ContainerRuntime::learner_loop()
{
    auto last_upload = Clock::now();
    while (!stopping_) {
        std::optional<net::Weights> weights;
        {
            std::lock_guard lock{weights_mutex_};
            weights.swap(pending_weights_);
        }
        if (weights) {
            std::lock_guard lock{learner_mutex_};
            core_.install(*weights);
            refresh_view();
        }
        if (seconds_since(last_upload) >= options_.head_upload_every_s) {
            net::HeadUpload upload;
            {
                std::lock_guard lock{learner_mutex_};
                upload = core_.head_upload();
            }
            std::lock_guard lock{head_mutex_};
            pending_head_ = std::move(upload);
            last_upload = Clock::now();
        }
        auto batch = feed_.try_pop();
        if (!batch) {
            nap();
            continue;
        }
        std::lock_guard lock{learner_mutex_};
        core_.learn_on(*batch);
        core_.publish_snapshot();
        refresh_view();
        ++learner_steps_;
    }
}

void ContainerRuntime::refresh_view()
{
    LearnerView v{core_.last_step(), core_.learner_steps(), core_.learner().weights_version(),
                  core_.learner().fallback_steps()};
    std::lock_guard lock{view_mutex_};
    view_ = v;
}

void ContainerRuntime::link_loop()
{
    struct Pending {
        net::TrajBatch batch;
        std::vector<std::uint8_t> frame;
        bool sent_before = false;
    };
    std::deque<Pending> unsent;
    std::map<std::uint64_t, Pending> in_flight;
    std::uint64_t counter = 0;
    net::Connection conn;
    auto backoff = std::chrono::milliseconds(50);
    auto next_attempt = Clock::now();
    auto last_link = Clock::now();
    auto last_stats = Clock::now();
    std::vector<std::vector<replay::Trajectory>> transfers;

    const auto drop_link = [&](const char* why) {
        if (conn.open()) {
            log_warn(std::string("container ") + std::to_string(config_.container_id) + ": link lost (" + why + ")");
            std::lock_guard lock{link_mutex_};
            ++link_.link_failures;
        }
        conn.close();
        // Unacknowledged batches go back to the front, oldest first.
        for (auto it = in_flight.rbegin(); it != in_flight.rend(); ++it) {
            unsent.push_front(std::move(it->second));
        }
        in_flight.clear();
        next_attempt = Clock::now() + backoff;
    };

    while (!stopping_) {
        transfers.clear();
        outbox_.drain_into(transfers);
        if (!transfers.empty() && !options_.port) {
            std::lock_guard lock{link_mutex_};
            for (const auto& t : transfers) {
                ++link_.batches_created;
                ++link_.discarded_without_link;
                link_.trajectories_created += t.size();
            }
            transfers.clear();
        }
        // Episodes join the newest batch until it is first sent or full.
        for (auto& t : transfers) {
            for (auto& episode : t) {
                if (unsent.empty() || !unsent.back().frame.empty() ||
                    unsent.back().batch.trajectories.size() >= options_.max_batch_episodes) {
                    Pending p;
                    p.batch.container_id = config_.container_id;
                    p.batch.batch_seq = net::make_batch_seq(options_.incarnation, ++counter);
                    unsent.push_back(std::move(p));
                    std::lock_guard lock{link_mutex_};
                    ++link_.batches_created;
                }
                unsent.back().batch.trajectories.push_back(std::move(episode));
                std::lock_guard lock{link_mutex_};
                ++link_.trajectories_created;
            }
        }
        while (unsent.size() > options_.max_pending_batches) {
            // Nothing acknowledged is ever discarded: these batches have no ACK yet.
            std::lock_guard lock{link_mutex_};
            ++link_.dropped_unsent;
            unsent.pop_front();
        }
        if (!options_.port) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            continue;
        }

        if (!conn.open()) {
            if (Clock::now() - last_link > options_.orphan_timeout) {
                log_error("container " + std::to_string(config_.container_id) + ": no centralizer, giving up");
                orphaned_ = true;
                return;
            }
            if (Clock::now() < next_attempt) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                continue;
            }
            auto c = net::connect_local(*options_.port, std::chrono::milliseconds(500));
            if (!c) {
                std::lock_guard lock{link_mutex_};
                ++link_.connect_failures;
                backoff = std::min(backoff * 2, std::chrono::milliseconds(2000));
                next_attempt = Clock::now() + backoff;
                continue;
            }
            conn = std::move(*c);
            backoff = std::chrono::milliseconds(50);
            try {
                conn.send(net::encode(net::Message{net::Hello{config_.container_id, options_.incarnation}}));
            } catch (const net::LinkError& e) {
                drop_link(e.what());
                continue;
            }
            std::lock_guard lock{link_mutex_};
            ++link_.connects;
        }
        last_link = Clock::now();

        try {
            while (!unsent.empty() && in_flight.size() < options_.max_in_flight) {
                auto p = std::move(unsent.front());
                unsent.pop_front();
                if (p.frame.empty()) {
                    p.frame = net::encode(net::Message{p.batch});
                }
                conn.send(p.frame);
                {
                    std::lock_guard lock{link_mutex_};
                    ++(p.sent_before ? link_.resends : link_.first_sends);
                }
                p.sent_before = true;
                const auto seq = p.batch.batch_seq;
                in_flight.emplace(seq, std::move(p));
            }
            std::optional<net::HeadUpload> head;
            {
                std::lock_guard lock{head_mutex_};
                head.swap(pending_head_);
            }
            if (head) {
                conn.send(net::encode(net::Message{*head}));
                std::lock_guard lock{link_mutex_};
                ++link_.heads_sent;
            }
            if (seconds_since(last_stats) >= options_.stats_every_s) {
                auto j = core_stats();
                j["incarnation"] = options_.incarnation;
                conn.send(net::encode(net::Message{net::Stats{config_.container_id, j.dump()}}));
                last_stats = Clock::now();
            }
            for (const auto& body : conn.receive(std::chrono::milliseconds(5))) {
                auto message = net::decode(body);
                if (auto* ack = std::get_if<net::Ack>(&message)) {
                    auto it = in_flight.find(ack->batch_seq);
                    std::lock_guard lock{link_mutex_};
                    if (it == in_flight.end() || ack->container_id != config_.container_id) {
                        ++link_.stray_acks;
                        continue;
                    }
                    ++link_.acked;
                    link_.trajectories_acked += it->second.batch.trajectories.size();
                    acked_seqs_.push_back(ack->batch_seq);
                    in_flight.erase(it);
                } else if (auto* w = std::get_if<net::Weights>(&message)) {
                    std::lock_guard lock{weights_mutex_};
                    pending_weights_ = std::move(*w);
                    std::lock_guard link_lock{link_mutex_};
                    ++link_.weights_received;
                } else if (auto* s = std::get_if<net::Stats>(&message)) {
                    const auto j = nlohmann::json::parse(s->json, nullptr, false);
                    if (j.is_object() && j.value("command", "") == "stop") {
                        stop_requested_ = true;
                    }
                }
            }
        } catch (const net::LinkError& e) {
            drop_link(e.what());
        }
    }

    std::lock_guard lock{link_mutex_};
    pending_at_exit_ = unsent.size() + in_flight.size();
}

nlohmann::json ContainerRuntime::core_stats() const
{
    LearnerView v;
    {
        std::lock_guard lock{view_mutex_};
        v = view_;
    }
    std::uint64_t gathered = 0, forwarded = 0;
    {
        std::lock_guard lock{gather_mutex_};
        gathered = core_.queue_manager().counters().gathered;
        forwarded = core_.queue_manager().counters().forwarded;
    }
    replay::BufferStats b;
    {
        std::lock_guard lock{buffer_mutex_};
        b = core_.buffer().buffer().stats();
    }
    return nlohmann::json{{"container_id", config_.container_id},
                          {"env_steps", core_.env_steps()},
                          {"episodes", core_.episodes()},
                          {"epsilon", core_.epsilon()},
                          {"dropped_episodes", core_.dropped_episodes()},
                          {"learner_steps", v.updates},
                          {"td_loss", v.last.td},
                          {"kl_mean", v.last.kl_mean},
                          {"diversity_active", v.last.diversity_active},
                          {"fallback_steps", v.fallback_steps},
                          {"buffer_size", b.size},
                          {"buffer_inserted", b.inserted},
                          {"weights_version", v.weights_version},
                          {"gathered", gathered},
                          {"forwarded", forwarded}};
}

LinkCounters ContainerRuntime::link_counters() const
{
    std::lock_guard lock{link_mutex_};
    return link_;
}

std::vector<double> ContainerRuntime::enqueue_latencies() const
{
    std::vector<double> all;
    for (const auto& v : latencies_) {
        all.insert(all.end(), v.begin(), v.end());
    }
    return all;
}

nlohmann::json ContainerRuntime::summary() const
{
    auto j = core_stats();
    std::lock_guard lock{link_mutex_};
    j["incarnation"] = options_.incarnation;
    j["learner_steps_runtime"] = learner_steps_.load();
    j["samples"] = samples_.load();
    j["link"] = {{"connects", link_.connects},
                 {"connect_failures", link_.connect_failures},
                 {"link_failures", link_.link_failures},
                 {"batches_created", link_.batches_created},
                 {"first_sends", link_.first_sends},
                 {"resends", link_.resends},
                 {"acked", link_.acked},
                 {"trajectories_created", link_.trajectories_created},
                 {"trajectories_acked", link_.trajectories_acked},
                 {"stray_acks", link_.stray_acks},
                 {"dropped_unsent", link_.dropped_unsent},
                 {"discarded_without_link", link_.discarded_without_link},
                 {"pending_at_exit", pending_at_exit_},
                 {"weights_received", link_.weights_received},
                 {"heads_sent", link_.heads_sent}};
    j["acked_seqs"] = acked_seqs_;
    return j;
}

}  // namespace cmarl::container
