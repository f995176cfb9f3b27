#include "cmarl/valuefn/loss.hpp"

#include <algorithm>

#include "cmarl/common/error.hpp"
#include "cmarl/numerics/layers.hpp"
#include "cmarl/numerics/ops.hpp"
#include "cmarl/valuefn/mixer.hpp"
#include "cmarl/valuefn/policy.hpp"

namespace cmarl::valuefn {

using namespace numerics;
using replay::Trajectory;

namespace {

// Batch arranged per time step; agent rows are ordered episode-major (b * n + i).
struct StepTensors {
    Tensor inputs;                    // [B*n, input_dim]
    std::vector<std::uint8_t> avail;  // B*n*A, padding rows fully legal
    Tensor state;                     // [B, state_dim]
    std::vector<std::int32_t> actions;
    Tensor reward;                    // [B,1]
    Tensor not_terminal;              // [B,1]
    Tensor mask;                      // [B,1], 1 for real steps
    Tensor agent_mask;                // [B*n,1]
};

std::vector<StepTensors> arrange(std::span<const Trajectory* const> batch, const NetDims& d, std::size_t steps)
{
    const std::size_t B = batch.size();
    const std::size_t n = d.n_agents;
    const std::size_t A = d.n_actions;
    std::vector<StepTensors> out(steps + 1);
    for (std::size_t t = 0; t <= steps; ++t) {
        StepTensors& s = out[t];
        s.inputs = Tensor::matrix(B * n, d.input_dim());
        s.avail.assign(B * n * A, 1);
        s.state = Tensor::matrix(B, d.state_dim);
        s.actions.assign(B * n, 0);
        s.reward = Tensor::matrix(B, 1);
        s.not_terminal = Tensor::matrix(B, 1);
        s.mask = Tensor::matrix(B, 1);
        s.agent_mask = Tensor::matrix(B * n, 1);
        for (std::size_t b = 0; b < B; ++b) {
            const Trajectory& tr = *batch[b];
            if (t > tr.length) {
                continue;
            }
            const auto st = tr.state_at(t);
            std::copy(st.begin(), st.end(), &s.state(b, 0));
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t row = b * n + i;
                const auto o = tr.obs_at(t, i);
                std::copy(o.begin(), o.end(), &s.inputs(row, 0));
                if (t > 0) {
                    s.inputs(row, d.obs_dim + static_cast<std::size_t>(tr.action_at(t - 1, i))) = 1.0;
                }
                const auto m = tr.avail_at(t, i);
                std::copy(m.begin(), m.end(), s.avail.begin() + static_cast<std::ptrdiff_t>(row * A));
            }
            if (t < tr.length) {
                s.mask[b] = 1.0;
                s.reward[b] = tr.rewards[t];
                s.not_terminal[b] = tr.terminal[t] ? 0.0 : 1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    s.actions[b * n + i] = tr.action_at(t, i);
                    s.agent_mask[b * n + i] = 1.0;
                }
            }
        }
    }
    return out;
}

Var agent_step(Var x, Var& h, const NetVars& net)
{
    const Var emb = relu(linear(x, net["shared.fc_in.w"], net["shared.fc_in.b"]));
    h = gru_step(emb, h,
                 GruWeights{net["shared.gru.w_ih"], net["shared.gru.w_hh"], net["shared.gru.b_ih"],
                            net["shared.gru.b_hh"]});
    return linear(h, net["head.fc_out.w"], net["head.fc_out.b"]);
}

void check_batch(std::span<const Trajectory* const> batch, const NetDims& d)
{
    if (batch.empty()) {
        throw ContractViolation("loss over an empty batch");
    }
    for (const Trajectory* tr : batch) {
        if (tr == nullptr || !tr->well_formed() || tr->n_agents != d.n_agents || tr->n_actions != d.n_actions ||
            tr->obs_dim != d.obs_dim || tr->state_dim != d.state_dim) {
            throw ContractViolation("batch trajectory does not match the network dimensions");
        }
    }
}

}  // namespace

LossTerms qmix_loss(const ParamSet& online, const ParamSet& target, const NetDims& dims,
                    std::span<const Trajectory* const> batch, const LossConfig& config, Trainable trainable,
                    std::span<const ParamSet> sibling_heads)
{
    check_batch(batch, dims);
    const std::size_t B = batch.size();
    const std::size_t n = dims.n_agents;
    const std::size_t A = dims.n_actions;
    std::size_t steps = 0;
    double total_steps = 0.0;
    for (const Trajectory* tr : batch) {
        steps = std::max<std::size_t>(steps, tr->length);
        total_steps += tr->length;
    }
    const auto data = arrange(batch, dims, steps);

    // Bootstrapped targets from the target network, untracked.
    std::vector<Tensor> targets(steps);
    {
        Tape tape;
        const NetVars net{tape, target, {}};
        Var h = tape.constant(Tensor::matrix(B * n, dims.hidden));
        for (std::size_t t = 0; t <= steps; ++t) {
            const Tensor& q = agent_step(tape.constant(data[t].inputs), h, net).value();
            if (t == 0) {
                continue;
            }
            Tensor best = Tensor::matrix(B, n);
            for (std::size_t row = 0; row < B * n; ++row) {
                best[row] = q[row * A + static_cast<std::size_t>(greedy_action(
                                            std::span<const double>(q.data() + row * A, A),
                                            std::span<const std::uint8_t>(&data[t].avail[row * A], A)))];
            }
            const Tensor& next = mix(tape.constant(best), tape.constant(data[t].state), net, dims).value();
            Tensor y = Tensor::matrix(B, 1);
            const StepTensors& prev = data[t - 1];
            for (std::size_t b = 0; b < B; ++b) {
                y[b] = prev.reward[b] + config.gamma * prev.not_terminal[b] * next[b];
            }
            targets[t - 1] = std::move(y);
        }
    }

    std::vector<std::string> trainable_prefixes{head_prefix, mixer_prefix};
    if (trainable == Trainable::everything) {
        trainable_prefixes.emplace_back(shared_prefix);
    }
    const double n_policies = 1.0 + static_cast<double>(sibling_heads.size());

    Tape tape;
    const NetVars net{tape, online, trainable_prefixes};
    Var h = tape.constant(Tensor::matrix(B * n, dims.hidden));
    Var td_sum = tape.constant(Tensor::scalar(0.0));
    Var kl_sum = tape.constant(Tensor::scalar(0.0));
    for (std::size_t t = 0; t < steps; ++t) {
        const StepTensors& s = data[t];
        const Var q = agent_step(tape.constant(s.inputs), h, net);
        const Var chosen = reshape(gather_cols(q, s.actions), B, n);
        const Var q_tot = mix(chosen, tape.constant(s.state), net, dims);
        const Var err = mul(sub(q_tot, tape.constant(targets[t])), tape.constant(s.mask));
        td_sum = add(td_sum, sum(square(err)));

        if (config.diversity) {
            const Var own = masked_softmax(q, s.avail, config.temperature);
            Tensor others = Tensor::matrix(B * n, A);
            for (const ParamSet& head : sibling_heads) {
                const Tensor qj =
                    linear_forward(h.value(), head.tensor("head.fc_out.w"), head.tensor("head.fc_out.b"));
                for (std::size_t row = 0; row < B * n; ++row) {
                    const auto p = boltzmann(std::span<const double>(qj.data() + row * A, A),
                                             std::span<const std::uint8_t>(&s.avail[row * A], A),
                                             config.temperature);
                    for (std::size_t a = 0; a < A; ++a) {
                        others[row * A + a] += p[a];
                    }
                }
            }
            const Var kl = kl_to_mixture(own, tape.constant(std::move(others)), n_policies);
            kl_sum = add(kl_sum, sum(mul(kl, tape.constant(s.agent_mask))));
        }
    }

    const Var td = scale(td_sum, 1.0 / total_steps);
    Var loss = td;
    LossTerms out;
    out.td = td.value().item();
    if (config.diversity) {
        const Var kl_mean = scale(kl_sum, 1.0 / static_cast<double>(B));
        out.kl_mean = kl_mean.value().item();
        loss = add(loss, scale(square(add_scalar(kl_mean, -config.lambda)), config.beta));
    }
    out.total = loss.value().item();
    if (loss.requires_grad()) {
        out.grad = tape.backward(loss);
    } else {
        out.grad.assign(online.size(), 0.0);
    }
    return out;
}

}  // namespace cmarl::valuefn
