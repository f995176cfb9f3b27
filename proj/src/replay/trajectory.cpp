#include "cmarl/replay/trajectory.hpp"

#include <numeric>

#include "cmarl/common/error.hpp"

namespace cmarl::replay {

double Trajectory::total_reward() const noexcept
{
    return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

std::span<const double> Trajectory::obs_at(std::size_t t, std::size_t agent) const
{
    return std::span<const double>(obs).subspan((t * n_agents + agent) * obs_dim, obs_dim);
}

std::span<const double> Trajectory::state_at(std::size_t t) const
{
    return std::span<const double>(state).subspan(t * state_dim, state_dim);
}

std::span<const std::uint8_t> Trajectory::avail_at(std::size_t t, std::size_t agent) const
{
    return std::span<const std::uint8_t>(avail).subspan((t * n_agents + agent) * n_actions, n_actions);
}

bool Trajectory::well_formed() const noexcept
{
    const std::size_t steps = length + std::size_t{1};
    if (n_agents == 0 || n_actions == 0 || obs_dim == 0 || state_dim == 0 || length == 0) {
        return false;
    }
    if (obs.size() != steps * n_agents * obs_dim || state.size() != steps * state_dim ||
        avail.size() != steps * n_agents * n_actions || actions.size() != std::size_t{length} * n_agents ||
        rewards.size() != length || terminal.size() != length) {
        return false;
    }
    for (std::size_t k = 0; k < actions.size(); ++k) {
        const auto a = actions[k];
        if (a < 0 || static_cast<std::uint32_t>(a) >= n_actions) {
            return false;
        }
    }
    return true;
}

TrajectoryBuilder::TrajectoryBuilder(const envs::EnvSpec& spec, const envs::Observation& first)
{
    traj_.n_agents = static_cast<std::uint32_t>(spec.n_agents);
    traj_.n_actions = static_cast<std::uint32_t>(spec.n_actions);
    traj_.obs_dim = static_cast<std::uint32_t>(spec.obs_dim);
    traj_.state_dim = static_cast<std::uint32_t>(spec.state_dim);
    append_observation(first.obs, first.state, first.avail_actions);
}

void TrajectoryBuilder::append_observation(const std::vector<std::vector<double>>& obs,
                                           const std::vector<double>& state,
                                           const std::vector<envs::ActionMask>& avail)
{
    if (obs.size() != traj_.n_agents || state.size() != traj_.state_dim || avail.size() != traj_.n_agents) {
        throw ContractViolation("trajectory: observation does not match the env spec");
    }
    for (const auto& o : obs) {
        if (o.size() != traj_.obs_dim) {
            throw ContractViolation("trajectory: observation width mismatch");
        }
        traj_.obs.insert(traj_.obs.end(), o.begin(), o.end());
    }
    traj_.state.insert(traj_.state.end(), state.begin(), state.end());
    for (const auto& m : avail) {
        if (m.size() != traj_.n_actions) {
            throw ContractViolation("trajectory: action mask width mismatch");
        }
        traj_.avail.insert(traj_.avail.end(), m.begin(), m.end());
    }
}

void TrajectoryBuilder::add(std::span<const int> joint_action, const envs::StepResult& step)
{
    if (joint_action.size() != traj_.n_agents) {
        throw ContractViolation("trajectory: joint action size mismatch");
    }
    traj_.actions.insert(traj_.actions.end(), joint_action.begin(), joint_action.end());
    traj_.rewards.push_back(step.reward);
    traj_.terminal.push_back(step.terminated && !step.truncated ? 1 : 0);
    ++traj_.length;
    append_observation(step.next_obs, step.next_state, step.avail_actions);
}

Trajectory TrajectoryBuilder::finish() &&
{
    return std::move(traj_);
}

namespace {

std::uint32_t read_count(numerics::ByteReader& r, const char* what)
{
    const std::uint32_t n = r.u32();
    if (n > r.remaining()) {
        throw IntegrityError(std::string("implausible ") + what + " count " + std::to_string(n));
    }
    return n;
}

template <typename T, typename Put>
void put_array(numerics::ByteWriter& w, const std::vector<T>& v, Put put)
{
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const T& x : v) {
        put(x);
    }
}

}  // namespace

void write_trajectory(numerics::ByteWriter& w, const Trajectory& t)
{
    w.u64(t.uid);
    w.u32(t.container_id);
    w.f64(t.priority);
    w.u32(t.n_agents);
    w.u32(t.n_actions);
    w.u32(t.obs_dim);
    w.u32(t.state_dim);
    w.u32(t.length);
    put_array(w, t.obs, [&](double v) { w.f64(v); });
    put_array(w, t.state, [&](double v) { w.f64(v); });
    put_array(w, t.avail, [&](std::uint8_t v) { w.u8(v); });
    put_array(w, t.actions, [&](std::int32_t v) { w.i32(v); });
    put_array(w, t.rewards, [&](double v) { w.f64(v); });
    put_array(w, t.terminal, [&](std::uint8_t v) { w.u8(v); });
}

Trajectory read_trajectory(numerics::ByteReader& r)
{
    Trajectory t;
    t.uid = r.u64();
    t.container_id = r.u32();
    t.priority = r.f64();
    t.n_agents = r.u32();
    t.n_actions = r.u32();
    t.obs_dim = r.u32();
    t.state_dim = r.u32();
    t.length = r.u32();
    const auto f64s = [&](std::vector<double>& out, const char* what) {
        out.resize(read_count(r, what));
        r.f64s(out);
    };
    f64s(t.obs, "observation");
    f64s(t.state, "state");
    t.avail.resize(read_count(r, "mask"));
    for (auto& v : t.avail) v = r.u8();
    t.actions.resize(read_count(r, "action"));
    for (auto& v : t.actions) v = r.i32();
    f64s(t.rewards, "reward");
    t.terminal.resize(read_count(r, "terminal"));
    for (auto& v : t.terminal) v = r.u8();
    if (!t.well_formed()) {
        throw IntegrityError("trajectory arrays disagree with its header");
    }
    return t;
}

}  // namespace cmarl::replay
