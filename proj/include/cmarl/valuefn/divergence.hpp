#pragma once

#include <span>

#include "cmarl/numerics/param_set.hpp"
#include "cmarl/replay/trajectory.hpp"
#include "cmarl/valuefn/qnet.hpp"

namespace cmarl::valuefn {

// Agent features come from the shared block of `base`; each entry of `heads`
// turns them into a Boltzmann policy. Returns the mean over heads of the
// batch-average per-episode sum over steps and agents of KL[head || average of all heads].
double policy_divergence(const numerics::ParamSet& base, std::span<const numerics::ParamSet> heads,
                         const NetDims& dims, std::span<const replay::Trajectory* const> batch, double temperature);

}  // namespace cmarl::valuefn
