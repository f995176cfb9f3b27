#include "cmarl/centralizer/runtime.hpp"

#include <algorithm>

#include "cmarl/common/error.hpp"
#include "cmarl/common/log.hpp"
#include "cmarl/valuefn/divergence.hpp"

namespace cmarl::centralizer {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t unbounded = std::size_t{1} << 30;

void nap() { std::this_thread::sleep_for(std::chrono::milliseconds(1)); }

}  // namespace

void Quiescer::checkpoint()
{
    std::unique_lock lock{mutex_};
    if (!requested_) {
        return;
    }
    ++parked_;
    cv_.notify_all();
    cv_.wait(lock, [this] { return !requested_; });
    --parked_;
}

void Quiescer::pause()
{
    std::unique_lock lock{mutex_};
    requested_ = true;
    cv_.wait(lock, [this] { return parked_ >= workers_; });
}

void Quiescer::resume()
{
    std::lock_guard lock{mutex_};
    requested_ = false;
    cv_.notify_all();
}

void Quiescer::set_workers(std::size_t n)
{
    std::lock_guard lock{mutex_};
    workers_ = n;
}

CentralRuntime::CentralRuntime(const CentralConfig& config, CentralRuntimeOptions options)
    : config_{config},
      options_{options},
      core_{config},
      inbox_{unbounded},
      feed_{options.feed_capacity == 0 ? 1 : options.feed_capacity}
{
    refresh_view();
}

void CentralRuntime::refresh_view()
{
    LearnerView v{std::make_shared<const numerics::ParamSet>(core_.learner().learner().online()),
                  core_.learner().learner().updates(), core_.learner().last_td(), core_.learner().broadcast_version()};
    std::lock_guard lock{view_mutex_};
    view_ = std::move(v);
}

CentralRuntime::~CentralRuntime() { stop(); }

void CentralRuntime::start()
{
    if (!threads_.empty()) {
        return;
    }
    listener_ = std::make_unique<net::Listener>(options_.port);
    port_ = listener_->port();
    started_ = Clock::now();
    updates_at_start_ = core_.learner().learner().updates();
    batches_received_ = 0;
    stopping_ = false;
    threads_.emplace_back([this] { io_loop(); });
    threads_.emplace_back([this] { gather_loop(); });
    threads_.emplace_back([this] { buffer_loop(); });
    threads_.emplace_back([this] { learner_loop(); });
}

void CentralRuntime::stop()
{
    stopping_ = true;
    quiescer_.resume();
    for (auto& t : threads_) {
        if (t.joinable()) {
            t.join();
        }
    }
    threads_.clear();
    listener_.reset();
}

void CentralRuntime::io_loop()
{
    std::vector<Peer> peers;
    while (!stopping_) {
        quiescer_.checkpoint();
        if (link_down_) {
            if (listener_ || !peers.empty()) {
                log_warn("centralizer: link down, dropping " + std::to_string(peers.size()) + " connections");
                peers.clear();
                listener_.reset();
                connected_ = 0;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
            continue;
        }
        if (!listener_) {
            try {
                listener_ = std::make_unique<net::Listener>(port_);
                log_info("centralizer: link restored on port " + std::to_string(port_));
            } catch (const std::exception& e) {
                log_warn(std::string("centralizer: cannot listen yet: ") + e.what());
                std::this_thread::sleep_for(std::chrono::milliseconds(200));
                continue;
            }
        }
        if (auto c = listener_->accept(std::chrono::milliseconds(peers.empty() ? 5 : 0))) {
            Peer p;
            p.conn = std::move(*c);
            peers.push_back(std::move(p));
        }

        std::shared_ptr<const std::vector<std::uint8_t>> weights;
        std::uint64_t version = 0;
        {
            std::lock_guard lock{weights_mutex_};
            weights = weights_frame_;
            version = weights_version_;
        }
        const auto stop_frame =
            net::encode(net::Message{net::Stats{0, nlohmann::json{{"command", "stop"}}.dump()}});

        for (auto& peer : peers) {
            try {
                if (peer.container_id && weights && peer.weights_sent < version) {
                    peer.conn.send(*weights);
                    peer.weights_sent = version;
                }
                if (peer.container_id && stop_containers_ && !peer.told_to_stop) {
                    peer.conn.send(stop_frame);
                    peer.told_to_stop = true;
                }
                for (auto& body : peer.conn.receive(std::chrono::milliseconds(peers.size() > 1 ? 1 : 3))) {
                    handle(peer, net::decode(body));
                }
            } catch (const net::LinkError&) {
                peer.conn.close();
            } catch (const IntegrityError& e) {
                log_error(std::string("centralizer: dropping connection: ") + e.what());
                peer.conn.close();
            }
        }
        std::erase_if(peers, [](const Peer& p) { return !p.conn.open(); });
        connected_ = peers.size();
    }
}

void CentralRuntime::handle(Peer& peer, net::Message message)
{
    if (auto* hello = std::get_if<net::Hello>(&message)) {
        if (hello->container_id >= config_.n_containers) {
            throw IntegrityError("hello from unknown container " + std::to_string(hello->container_id));
        }
        peer.container_id = hello->container_id;
        peer.incarnation = hello->incarnation;
        std::lock_guard lock{report_mutex_};
        reports_[{hello->container_id, hello->incarnation}].incarnation = hello->incarnation;
        return;
    }
    if (!peer.container_id) {
        throw IntegrityError("message before hello");
    }
    if (auto* batch = std::get_if<net::TrajBatch>(&message)) {
        if (batch->container_id != *peer.container_id) {
            throw IntegrityError("batch carries another container's id");
        }
        net::Ack ack;
        const auto before = core_.inbound().pushed();
        {
            std::lock_guard lock{io_mutex_};
            ack = core_.receive(std::move(*batch));
        }
        if (core_.inbound().pushed() != before) {
            ++batches_received_;
        }
        peer.conn.send(net::encode(net::Message{ack}));
    } else if (auto* head = std::get_if<net::HeadUpload>(&message)) {
        std::lock_guard lock{io_mutex_};
        core_.receive_head(*head);
    } else if (auto* stats = std::get_if<net::Stats>(&message)) {
        const auto j = nlohmann::json::parse(stats->json, nullptr, false);
        if (!j.is_object()) {
            throw IntegrityError("stats message is not a JSON object");
        }
        std::lock_guard lock{report_mutex_};
        auto& r = reports_[{*peer.container_id, peer.incarnation}];
        r.incarnation = peer.incarnation;
        r.env_steps = j.value("env_steps", r.env_steps);
        r.kl_mean = j.value("kl_mean", r.kl_mean);
        r.buffer_size = j.value("buffer_size", r.buffer_size);
        r.dropped_episodes = j.value("dropped_episodes", r.dropped_episodes);
    } else {
        throw IntegrityError(std::string("unexpected ") + net::type_name(net::type_of(message)) + " from a container");
    }
}

void CentralRuntime::gather_loop()
{
    while (!stopping_) {
        quiescer_.checkpoint();
        std::optional<std::vector<replay::Trajectory>> batch;
        {
            std::lock_guard lock{gather_mutex_};
            batch = core_.gather();
        }
        if (batch) {
            inbox_.push(std::move(*batch));
        } else {
            nap();
        }
    }
}

void CentralRuntime::buffer_loop()
{
    std::vector<std::vector<replay::Trajectory>> arrived;
    while (!stopping_) {
        quiescer_.checkpoint();
        bool idle = true;
        arrived.clear();
        inbox_.drain_into(arrived);
        if (arrived.empty()) {
            core_.buffer().request();
        } else {
            std::lock_guard lock{buffer_mutex_};
            for (auto& b : arrived) {
                core_.buffer().insert(std::move(b));
            }
            idle = false;
        }
        if (feed_.size() < feed_.capacity()) {
            std::vector<replay::TrajectoryPtr> batch;
            {
                std::lock_guard lock{buffer_mutex_};
                batch = core_.buffer().sample();
            }
            if (!batch.empty()) {
                feed_.push(std::move(batch));
                idle = false;
            }
        }
        if (idle) {
            nap();
        }
    }
}

void CentralRuntime::learner_loop()
{
    auto last_broadcast = Clock::now();
    while (!stopping_) {
        quiescer_.checkpoint();
        if (std::chrono::duration<double>(Clock::now() - last_broadcast).count() >= options_.broadcast_every_s) {
            last_broadcast = Clock::now();
            std::vector<net::HeadEntry> heads;
            {
                std::lock_guard lock{io_mutex_};
                heads = core_.heads().entries();
            }
            std::optional<net::Weights> weights;
            {
                std::lock_guard lock{learner_mutex_};
                weights = core_.learner().make_broadcast(heads);
                refresh_view();
            }
            if (weights) {
                auto frame = std::make_shared<const std::vector<std::uint8_t>>(net::encode(net::Message{*weights}));
                std::lock_guard lock{weights_mutex_};
                weights_frame_ = std::move(frame);
                weights_version_ = weights->version;
            }
        }
        const double elapsed = std::chrono::duration<double>(Clock::now() - started_).count();
        const double allowed = std::max(static_cast<double>(options_.updates_per_batch * batches_received_.load()),
                                        options_.min_updates_per_s * elapsed);
        if (static_cast<double>(updates() - updates_at_start_) >= allowed) {
            nap();
            continue;
        }
        auto batch = feed_.try_pop();
        if (!batch) {
            nap();
            continue;
        }
        std::lock_guard lock{learner_mutex_};
        core_.learn_on(*batch);
        refresh_view();
    }
}

std::uint64_t CentralRuntime::total_env_steps() const
{
    std::lock_guard lock{report_mutex_};
    std::uint64_t total = resumed_steps_;
    for (const auto& [key, r] : reports_) {
        total += r.env_steps;
    }
    return total;
}

std::map<std::uint32_t, ContainerReport> CentralRuntime::reports() const
{
    std::lock_guard lock{report_mutex_};
    std::map<std::uint32_t, ContainerReport> latest;
    for (const auto& [key, r] : reports_) {
        auto& slot = latest[key.first];
        if (r.incarnation >= slot.incarnation) {
            slot = r;
        }
    }
    return latest;
}

std::uint64_t CentralRuntime::updates() const
{
    std::lock_guard lock{view_mutex_};
    return view_.updates;
}

double CentralRuntime::last_td() const
{
    std::lock_guard lock{view_mutex_};
    return view_.td;
}

std::uint64_t CentralRuntime::broadcast_version() const
{
    std::lock_guard lock{view_mutex_};
    return view_.broadcast_version;
}

std::size_t CentralRuntime::buffer_size() const
{
    std::lock_guard lock{buffer_mutex_};
    return core_.buffer().buffer().size();
}

numerics::ParamSet CentralRuntime::online_params() const
{
    std::lock_guard lock{view_mutex_};
    return *view_.online;
}

EvalStats CentralRuntime::evaluate(std::size_t episodes, std::uint64_t seed) const
{
    return evaluate_policy(core_.env(), online_params(), core_.dims(), episodes, seed);
}

double CentralRuntime::policy_divergence(std::size_t episodes) const
{
    std::vector<net::HeadEntry> entries;
    {
        std::lock_guard lock{io_mutex_};
        entries = core_.heads().entries();
    }
    if (entries.size() < 2) {
        return 0.0;
    }
    std::vector<replay::TrajectoryPtr> contents;
    {
        std::lock_guard lock{buffer_mutex_};
        contents = core_.buffer().buffer().contents();
    }
    const std::size_t from = contents.size() > episodes ? contents.size() - episodes : 0;
    std::vector<const replay::Trajectory*> rows;
    for (std::size_t k = from; k < contents.size(); ++k) {
        rows.push_back(contents[k].get());
    }
    std::vector<numerics::ParamSet> heads;
    for (const auto& e : entries) {
        heads.push_back(e.head);
    }
    return valuefn::policy_divergence(online_params(), heads, core_.dims(), rows, config_.temperature);
}

void CentralRuntime::drain_in_flight()
{
    std::vector<std::vector<replay::Trajectory>> arrived;
    inbox_.drain_into(arrived);
    core_.buffer().request();
    if (auto batch = core_.gather()) {
        arrived.push_back(std::move(*batch));
    }
    for (auto& b : arrived) {
        core_.buffer().insert(std::move(b));
    }
    while (feed_.try_pop()) {
    }
}

void CentralRuntime::save(numerics::ByteWriter& w)
{
    const bool running = !threads_.empty();
    if (running) {
        quiescer_.pause();
    }
    try {
        drain_in_flight();
        w.u64(total_env_steps());
        core_.save(w);
    } catch (...) {
        if (running) quiescer_.resume();
        throw;
    }
    if (running) {
        quiescer_.resume();
    }
}

void CentralRuntime::load(numerics::ByteReader& r)
{
    if (!threads_.empty()) {
        throw UsageError("central state loaded while running");
    }
    const auto steps = r.u64();
    core_.load(r);
    refresh_view();
    std::lock_guard lock{report_mutex_};
    resumed_steps_ = steps;
    reports_.clear();
}

nlohmann::json CentralRuntime::summary() const
{
    nlohmann::json j;
    {
        std::scoped_lock lock{io_mutex_, buffer_mutex_, learner_mutex_};
        j = core_.stats();
        nlohmann::json accepted = nlohmann::json::object();
        for (const auto& [id, c] : core_.receiver().counters()) {
            (void)c;
            accepted[std::to_string(id)] = core_.receiver().seqs_for(id);
        }
        j["accepted_seqs"] = accepted;
    }
    j["total_env_steps"] = total_env_steps();
    j["batches_received_this_session"] = batches_received_.load();
    nlohmann::json reps = nlohmann::json::array();
    {
        std::lock_guard lock{report_mutex_};
        for (const auto& [key, r] : reports_) {
            reps.push_back({{"container_id", key.first},
                            {"incarnation", key.second},
                            {"env_steps", r.env_steps},
                            {"kl_mean", r.kl_mean},
                            {"dropped_episodes", r.dropped_episodes}});
        }
    }
    j["container_reports"] = reps;
    return j;
}

}  // namespace cmarl::centralizer
