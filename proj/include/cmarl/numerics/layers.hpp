#pragma once

#include <utility>
#include <vector>

#include "cmarl/numerics/ops.hpp"
#include "cmarl/numerics/tensor.hpp"

namespace cmarl::numerics {

// y = xW + b with x [R,in], W [in,out], b [1,out].
Var linear(Var x, Var weights, Var bias);
Tensor linear_forward(const Tensor& x, const Tensor& weights, const Tensor& bias);

// Gate blocks are packed column-wise in reset, update, candidate order:
// w_ih [in, 3H], w_hh [H, 3H], b_ih and b_hh [1, 3H].
//
//   r  = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
//   z  = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
//   n  = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h
struct GruWeights {
    Var w_ih;
    Var w_hh;
    Var b_ih;
    Var b_hh;
};

Var gru_step(Var x, Var h, const GruWeights& w);

struct GruState {
    std::vector<double> hidden;

    static GruState zeros(std::size_t hidden_dim) { return GruState{std::vector<double>(hidden_dim, 0.0)}; }
};

struct GruParams {
    Tensor w_ih;
    Tensor w_hh;
    Tensor b_ih;
    Tensor b_hh;
};

// Untracked single-row GRU step; returns the new hidden as a [1,H] tensor and state.
std::pair<Tensor, GruState> gru_step(const Tensor& x, const GruState& state, const GruParams& params);

}  // namespace cmarl::numerics
