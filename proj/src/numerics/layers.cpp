#include "cmarl/numerics/layers.hpp"

#include <string>

#include "cmarl/common/error.hpp"

namespace cmarl::numerics {

Var linear(Var x, Var weights, Var bias)
{
    if (x.value().cols() != weights.value().rows()) {
        throw ConfigError("linear: input width " + std::to_string(x.value().cols()) + " does not match weight rows " +
                          std::to_string(weights.value().rows()));
    }
    return add_row(matmul(x, weights), bias);
}

Tensor linear_forward(const Tensor& x, const Tensor& weights, const Tensor& bias)
{
    Tape tape;
    return linear(tape.constant(x), tape.constant(weights), tape.constant(bias)).value();
}

Var gru_step(Var x, Var h, const GruWeights& w)
{
    const std::size_t hidden = h.value().cols();
    if (w.w_hh.value().rows() != hidden || w.w_hh.value().cols() != 3 * hidden ||
        w.w_ih.value().cols() != 3 * hidden) {
        throw ConfigError("gru_step: gate weights do not match hidden width " + std::to_string(hidden));
    }
    const Var gi = linear(x, w.w_ih, w.b_ih);
    const Var gh = linear(h, w.w_hh, w.b_hh);
    const Var r = sigmoid(add(slice_cols(gi, 0, hidden), slice_cols(gh, 0, hidden)));
    const Var z = sigmoid(add(slice_cols(gi, hidden, 2 * hidden), slice_cols(gh, hidden, 2 * hidden)));
    const Var n = tanh(add(slice_cols(gi, 2 * hidden, 3 * hidden), mul(r, slice_cols(gh, 2 * hidden, 3 * hidden))));
    // (1 - z) * n + z * h  ==  n + z * (h - n)
    return add(n, mul(z, sub(h, n)));
}

std::pair<Tensor, GruState> gru_step(const Tensor& x, const GruState& state, const GruParams& params)
{
    Tape tape;
    const Tensor h0 = Tensor::row(state.hidden);
    const GruWeights w{tape.constant(params.w_ih), tape.constant(params.w_hh), tape.constant(params.b_ih),
                       tape.constant(params.b_hh)};
    Tensor h1 = gru_step(tape.constant(x), tape.constant(h0), w).value();
    GruState next{h1.storage()};
    return {std::move(h1), std::move(next)};
}

}  // namespace cmarl::numerics
