#pragma once

#include <span>
#include <string>
#include <vector>

#include "cmarl/envs/env.hpp"
#include "cmarl/numerics/layers.hpp"
#include "cmarl/numerics/param_set.hpp"
#include "cmarl/numerics/rng.hpp"

namespace cmarl::valuefn {

// Parameter name prefixes. The shared block (input layer and GRU) is trained
// centrally and broadcast; each container owns its head; the mixer is local to
// every learner.
inline constexpr const char* shared_prefix = "shared.";
inline constexpr const char* head_prefix = "head.";
inline constexpr const char* mixer_prefix = "mixer.";

struct NetDims {
    std::size_t n_agents = 1;
    std::size_t n_actions = 1;
    std::size_t obs_dim = 1;
    std::size_t state_dim = 1;
    std::size_t hidden = 64;
    // Width of the mixing layer; 0 selects a single linear mixing layer.
    std::size_t mixer_hidden = 32;

    // Observation followed by a one-hot of the agent's previous action.
    std::size_t input_dim() const noexcept { return obs_dim + n_actions; }

    static NetDims from_spec(const envs::EnvSpec& spec, std::size_t hidden = 64, std::size_t mixer_hidden = 32);
};

// Zero-initialized parameters with the full layout.
numerics::ParamSet make_params(const NetDims& dims);
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
void init_params(numerics::ParamSet& params, const NetDims& dims, numerics::Rng& rng);
numerics::ParamSet init_params(const NetDims& dims, numerics::Rng& rng);

// Builds the recurrent network input for one agent.
std::vector<double> agent_input(std::span<const double> obs, int last_action, std::size_t n_actions);

// Intermediate activations of one agent-network step, rows = agents.
struct AgentActivations {
    numerics::Tensor embedding;  // relu(fc_in)
    numerics::Tensor hidden;     // GRU output
    numerics::Tensor q;          // head output
};

// Untracked forward pass over a fixed parameter snapshot, for acting and evaluation.
class ActingNet {
public:
    ActingNet(const numerics::ParamSet& params, const NetDims& dims);

    const NetDims& dims() const noexcept { return dims_; }
    // inputs [rows, input_dim], hidden [rows, hidden].
    AgentActivations step(const numerics::Tensor& inputs, const numerics::Tensor& hidden) const;
    numerics::Tensor initial_hidden(std::size_t rows) const { return numerics::Tensor::matrix(rows, dims_.hidden); }

private:
    NetDims dims_;
    numerics::Tensor fc_in_w_, fc_in_b_;
    numerics::GruParams gru_;
    numerics::Tensor fc_out_w_, fc_out_b_;
};

// Single-agent step: q values for `obs` after `last_action` (-1 for none).
std::pair<std::vector<double>, numerics::GruState> agent_q(std::span<const double> obs, int last_action,
                                                           const numerics::GruState& state,
                                                           const numerics::ParamSet& params, const NetDims& dims);

}  // namespace cmarl::valuefn
