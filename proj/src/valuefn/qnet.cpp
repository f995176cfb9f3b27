#include "cmarl/valuefn/qnet.hpp"

#include <cmath>

#include "cmarl/common/error.hpp"
#include "eigen_maps.hpp"

namespace cmarl::valuefn {

using numerics::ParamSet;
using numerics::Tensor;

NetDims NetDims::from_spec(const envs::EnvSpec& spec, std::size_t hidden, std::size_t mixer_hidden)
{
    return NetDims{spec.n_agents, spec.n_actions, spec.obs_dim, spec.state_dim, hidden, mixer_hidden};
}

namespace {

struct Layer {
    std::string name;
    std::size_t in;
    std::size_t out;
};

std::vector<Layer> layers(const NetDims& d)
{
    const std::size_t h = d.hidden;
    const std::size_t e = d.mixer_hidden;
    std::vector<Layer> out{
        {"shared.fc_in", d.input_dim(), h},
        {"head.fc_out", h, d.n_actions},
    };
    if (e == 0) {
        out.push_back({"mixer.hyper_w1", d.state_dim, d.n_agents});
        out.push_back({"mixer.hyper_b1", d.state_dim, 1});
    } else {
        out.push_back({"mixer.hyper_w1", d.state_dim, d.n_agents * e});
        out.push_back({"mixer.hyper_b1", d.state_dim, e});
        out.push_back({"mixer.hyper_w2", d.state_dim, e});
        out.push_back({"mixer.v1", d.state_dim, e});
        out.push_back({"mixer.v2", e, 1});
    }
    return out;
}

void check(const NetDims& d)
{
    if (d.n_agents < 1 || d.n_actions < 1 || d.obs_dim < 1 || d.state_dim < 1 || d.hidden < 1) {
        throw ConfigError("network dimensions must be positive");
    }
}

}  // namespace

ParamSet make_params(const NetDims& dims)
{
    check(dims);
    ParamSet p;
    const std::size_t h = dims.hidden;
    const auto all = layers(dims);
    p.add(all[0].name + ".w", {all[0].in, all[0].out});
    p.add(all[0].name + ".b", {1, all[0].out});
    p.add("shared.gru.w_ih", {h, 3 * h});
    p.add("shared.gru.w_hh", {h, 3 * h});
    p.add("shared.gru.b_ih", {1, 3 * h});
    p.add("shared.gru.b_hh", {1, 3 * h});
    for (std::size_t k = 1; k < all.size(); ++k) {
        p.add(all[k].name + ".w", {all[k].in, all[k].out});
        p.add(all[k].name + ".b", {1, all[k].out});
    }
    return p;
}

void init_params(ParamSet& params, const NetDims& dims, numerics::Rng& rng)
{
    for (const auto& l : layers(dims)) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        numerics::fill_uniform(params.span(l.name + ".w"), bound, rng);
        numerics::fill_uniform(params.span(l.name + ".b"), bound, rng);
    }
    const double g = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
    for (const char* name : {"shared.gru.w_ih", "shared.gru.w_hh", "shared.gru.b_ih", "shared.gru.b_hh"}) {
        numerics::fill_uniform(params.span(name), g, rng);
    }
}

ParamSet init_params(const NetDims& dims, numerics::Rng& rng)
{
    ParamSet p = make_params(dims);
    init_params(p, dims, rng);
    return p;
}

std::vector<double> agent_input(std::span<const double> obs, int last_action, std::size_t n_actions)
{
    std::vector<double> in(obs.begin(), obs.end());
    in.resize(obs.size() + n_actions, 0.0);
    if (last_action >= 0 && static_cast<std::size_t>(last_action) < n_actions) {
        in[obs.size() + static_cast<std::size_t>(last_action)] = 1.0;
    }
    return in;
}

ActingNet::ActingNet(const ParamSet& params, const NetDims& dims)
    : dims_{dims},
      fc_in_w_{params.tensor("shared.fc_in.w")},
      fc_in_b_{params.tensor("shared.fc_in.b")},
      gru_{params.tensor("shared.gru.w_ih"), params.tensor("shared.gru.w_hh"), params.tensor("shared.gru.b_ih"),
           params.tensor("shared.gru.b_hh")},
      fc_out_w_{params.tensor("head.fc_out.w")},
      fc_out_b_{params.tensor("head.fc_out.b")}
{
    if (fc_in_w_.rows() != dims.input_dim() || fc_out_w_.cols() != dims.n_actions) {
        throw ConfigError("parameters do not match the network dimensions");
    }
}

AgentActivations ActingNet::step(const Tensor& inputs, const Tensor& hidden) const
{
    using numerics::as_matrix;
    const std::size_t rows = inputs.rows();
    const std::size_t h = dims_.hidden;
    if (inputs.cols() != dims_.input_dim() || hidden.rows() != rows || hidden.cols() != h) {
        throw ConfigError("agent network input has shape [" + std::to_string(rows) + "," +
                          std::to_string(inputs.cols()) + "], expected width " +
                          std::to_string(dims_.input_dim()));
    }
    AgentActivations out{Tensor::matrix(rows, h), Tensor::matrix(rows, h), Tensor::matrix(rows, dims_.n_actions)};

    auto x = as_matrix(out.embedding);
    x = (as_matrix(inputs) * as_matrix(fc_in_w_)).rowwise() + as_matrix(fc_in_b_).row(0);
    x = x.cwiseMax(0.0);

    const numerics::RowMatrix gi = (x * as_matrix(gru_.w_ih)).rowwise() + as_matrix(gru_.b_ih).row(0);
    const auto hp = as_matrix(hidden);
    const numerics::RowMatrix gh = (hp * as_matrix(gru_.w_hh)).rowwise() + as_matrix(gru_.b_hh).row(0);
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const auto eh = static_cast<Eigen::Index>(h);
    const numerics::RowMatrix r = (gi.leftCols(eh) + gh.leftCols(eh)).unaryExpr(sig);
    const numerics::RowMatrix z = (gi.middleCols(eh, eh) + gh.middleCols(eh, eh)).unaryExpr(sig);
    const numerics::RowMatrix n =
        (gi.rightCols(eh) + r.cwiseProduct(gh.rightCols(eh))).unaryExpr([](double v) { return std::tanh(v); });
    auto hn = as_matrix(out.hidden);
    hn = n + z.cwiseProduct(hp - n);

    auto q = as_matrix(out.q);
    q = (hn * as_matrix(fc_out_w_)).rowwise() + as_matrix(fc_out_b_).row(0);
    return out;
}

std::pair<std::vector<double>, numerics::GruState> agent_q(std::span<const double> obs, int last_action,
                                                           const numerics::GruState& state, const ParamSet& params,
                                                           const NetDims& dims)
{
    if (obs.size() != dims.obs_dim) {
        throw ConfigError("agent_q: observation width " + std::to_string(obs.size()) + ", expected " +
                          std::to_string(dims.obs_dim));
    }
    if (state.hidden.size() != dims.hidden) {
        throw ConfigError("agent_q: recurrent state width mismatch");
    }
    const ActingNet net{params, dims};
    const auto act = net.step(Tensor::row(agent_input(obs, last_action, dims.n_actions)), Tensor::row(state.hidden));
    return {act.q.storage(), numerics::GruState{act.hidden.storage()}};
}

}  // namespace cmarl::valuefn
