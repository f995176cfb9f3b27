#pragma once

#include <span>
#include <vector>

#include "cmarl/numerics/param_set.hpp"
#include "cmarl/replay/trajectory.hpp"
#include "cmarl/valuefn/qnet.hpp"

namespace cmarl::valuefn {

struct LossConfig {
    double gamma = 0.99;
    // Adds beta * (kl_mean - lambda)^2, where kl_mean is the batch average of the
    // per-episode sum over steps and agents of KL[own policy || container-average policy].
    bool diversity = false;
    double beta = 0.1;
    double lambda = 0.5;
    double temperature = 1.0;
};

enum class Trainable {
    everything,      // central learner
    head_and_mixer,  // container learner; the shared block is frozen
};

struct LossTerms {
    double total = 0.0;
    double td = 0.0;
    double kl_mean = 0.0;
    std::vector<double> grad;  // aligned with the online parameter set
};

// TD loss summed over every step of every episode and divided by the total step
// count. Targets use the target network's masked per-agent max, mixed by the
// target mixer; terminal steps drop the bootstrap.
//
// `sibling_heads` holds the head parameters of the other containers; the
// container-average policy uses them together with the online head.
LossTerms qmix_loss(const numerics::ParamSet& online, const numerics::ParamSet& target, const NetDims& dims,
                    std::span<const replay::Trajectory* const> batch, const LossConfig& config, Trainable trainable,
                    std::span<const numerics::ParamSet> sibling_heads = {});

}  // namespace cmarl::valuefn
