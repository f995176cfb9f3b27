#pragma once

#include <span>
#include <string>
#include <vector>

#include "cmarl/numerics/tape.hpp"
#include "cmarl/valuefn/qnet.hpp"

namespace cmarl::valuefn {

// Every tensor of a parameter set placed on a tape. Entries whose name starts
// with one of `trainable` become parameters, the rest constants.
class NetVars {
public:
    NetVars(numerics::Tape& tape, const numerics::ParamSet& params, const std::vector<std::string>& trainable);

    numerics::Var operator[](const std::string& name) const;

private:
    std::vector<std::pair<std::string, numerics::Var>> vars_;
};

// Monotonic mixing: q [R, n_agents] chosen utilities, state [R, state_dim] -> [R, 1].
// Hypernetwork weights pass through abs, so the output is nondecreasing in q.
numerics::Var mix(numerics::Var q, numerics::Var state, const NetVars& net, const NetDims& dims);

double mix(std::span<const double> q_locals, std::span<const double> state, const numerics::ParamSet& params,
           const NetDims& dims);

}  // namespace cmarl::valuefn
