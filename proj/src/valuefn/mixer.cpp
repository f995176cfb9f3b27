#include "cmarl/valuefn/mixer.hpp"

#include "cmarl/common/error.hpp"
#include "cmarl/numerics/layers.hpp"
#include "cmarl/numerics/ops.hpp"

namespace cmarl::valuefn {

using namespace numerics;

NetVars::NetVars(Tape& tape, const ParamSet& params, const std::vector<std::string>& trainable)
{
    for (const auto& e : params.entries()) {
        bool train = false;
        for (const auto& prefix : trainable) {
            train = train || e.name.starts_with(prefix);
        }
        vars_.emplace_back(e.name, train ? tape.parameter(params, e.name) : tape.constant(params.tensor(e.name)));
    }
}

Var NetVars::operator[](const std::string& name) const
{
    for (const auto& [n, v] : vars_) {
        if (n == name) {
            return v;
        }
    }
    throw ConfigError("missing network parameter '" + name + "'");
}

Var mix(Var q, Var state, const NetVars& net, const NetDims& dims)
{
    if (q.value().cols() != dims.n_agents || state.value().cols() != dims.state_dim ||
        q.value().rows() != state.value().rows()) {
        throw ConfigError("mix: expected q [R," + std::to_string(dims.n_agents) + "] and state [R," +
                          std::to_string(dims.state_dim) + "]");
    }
    const auto layer = [&](const std::string& name, Var x) { return linear(x, net[name + ".w"], net[name + ".b"]); };
    const Var w1 = abs(layer("mixer.hyper_w1", state));
    const Var b1 = layer("mixer.hyper_b1", state);
    if (dims.mixer_hidden == 0) {
        return add(row_sum(mul(q, w1)), b1);
    }
    const Var hidden = elu(add(rowwise_vecmat(q, w1, dims.mixer_hidden), b1));
    const Var w2 = abs(layer("mixer.hyper_w2", state));
    const Var v = layer("mixer.v2", relu(layer("mixer.v1", state)));
    return add(row_sum(mul(hidden, w2)), v);
}

double mix(std::span<const double> q_locals, std::span<const double> state, const ParamSet& params,
           const NetDims& dims)
{
    if (q_locals.size() != dims.n_agents) {
        throw ContractViolation("mix: expected " + std::to_string(dims.n_agents) + " local values, got " +
                                std::to_string(q_locals.size()));
    }
    Tape tape;
    const NetVars net{tape, params.subset(mixer_prefix), {}};
    const Var q = tape.constant(Tensor::row({q_locals.begin(), q_locals.end()}));
    const Var s = tape.constant(Tensor::row({state.begin(), state.end()}));
    return mix(q, s, net, dims).value().item();
}

}  // namespace cmarl::valuefn
