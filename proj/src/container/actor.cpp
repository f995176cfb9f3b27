#include "cmarl/container/actor.hpp"

#include "cmarl/valuefn/policy.hpp"

namespace cmarl::container {

std::uint64_t trajectory_uid(std::uint32_t container_id, std::uint32_t actor_id, std::uint64_t episode) noexcept
{
    return (static_cast<std::uint64_t>(container_id & 0xffffu) << 48) |
           (static_cast<std::uint64_t>(actor_id & 0xffffu) << 32) | (episode & 0xffffffffu);
}

Actor::Actor(std::uint32_t container_id, std::uint32_t actor_id, std::uint64_t seed, std::unique_ptr<envs::Env> env)
    : container_id_{container_id},
      actor_id_{actor_id},
      seed_{seed},
      env_{std::move(env)},
      rng_{numerics::make_rng(seed, {container_id, actor_id, 0xac7})}
{
}

replay::Trajectory Actor::run_episode(const valuefn::ActingNet& net, double epsilon)
{
    const auto& dims = net.dims();
    const envs::EnvSpec spec = env_->spec();
    const std::size_t n = spec.n_agents;
    auto obs = env_->reset(numerics::derive_seed(seed_, {container_id_, actor_id_, episodes_}));
    replay::TrajectoryBuilder builder{spec, obs};

    numerics::Tensor hidden = net.initial_hidden(n);
    numerics::Tensor inputs = numerics::Tensor::matrix(n, dims.input_dim());
    std::vector<int> last(n, -1);
    std::vector<int> joint(n);
    while (!env_->episode_over()) {
        inputs.fill(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < spec.obs_dim; ++k) {
                inputs(i, k) = obs.obs[i][k];
            }
            if (last[i] >= 0) {
                inputs(i, spec.obs_dim + static_cast<std::size_t>(last[i])) = 1.0;
            }
        }
        auto act = net.step(inputs, hidden);
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const double> q(act.q.data() + i * spec.n_actions, spec.n_actions);
            joint[i] = valuefn::epsilon_greedy(q, obs.avail_actions[i], epsilon, rng_);
        }
        const auto result = env_->step(joint);
        builder.add(joint, result);
        obs = envs::Observation{result.next_obs, result.next_state, result.avail_actions};
        hidden = std::move(act.hidden);
        last = joint;
    }
    replay::Trajectory t = std::move(builder).finish();
    t.container_id = container_id_;
    t.uid = trajectory_uid(container_id_, actor_id_, episodes_);
    ++episodes_;
    steps_ += t.length;
    return t;
}

void Actor::save(numerics::ByteWriter& w) const
{
    w.u64(episodes_);
    w.u64(steps_);
    w.str(numerics::save_rng(rng_));
}

void Actor::load(numerics::ByteReader& r)
{
    episodes_ = r.u64();
    steps_ = r.u64();
    numerics::load_rng(rng_, r.str());
}

}  // namespace cmarl::container
