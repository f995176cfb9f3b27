#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmarl/numerics/tape.hpp"

// Differentiable operations on 2-D tape values. Shapes are [rows, cols];
// a "row" operand is [1, cols].
namespace cmarl::numerics {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a[R,C] + b[1,C] broadcast over rows.
Var add_row(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var elu(Var a);
Var abs(Var a);
Var square(Var a);

// Sum of every element, as a [1,1] node.
Var sum(Var a);
// Per-row sum, [R,C] -> [R,1].
Var row_sum(Var a);

Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(Var a, Var b);
// out[r] = a[r, index[r]], [R,C] -> [R,1].
Var gather_cols(Var a, std::span<const std::int32_t> index);
Var reshape(Var a, std::size_t rows, std::size_t cols);

// out[r, j] = sum_i q[r, i] * w[r, i * m + j]; q is [R,n], w is [R, n*m].
Var rowwise_vecmat(Var q, Var w, std::size_t m);

// Row-wise softmax of a / temperature restricted to legal entries (mask != 0).
// Illegal entries get probability exactly 0.
Var masked_softmax(Var a, std::span<const std::uint8_t> mask, double temperature);

// Row-wise KL[p || (p + others) / n] where `others` holds the summed
// probabilities of the remaining n - 1 policies. Terms with p = 0 vanish.
Var kl_to_mixture(Var p, Var others, double n);

}  // namespace cmarl::numerics
