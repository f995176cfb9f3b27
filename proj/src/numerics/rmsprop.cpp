#include "cmarl/numerics/rmsprop.hpp"

#include <cmath>
#include <string>

#include "cmarl/common/error.hpp"

namespace cmarl::numerics {

Rmsprop::Rmsprop(RmspropConfig config, std::size_t n_params) : config_{config}, square_avg_(n_params, 0.0)
{
    if (!(config.learning_rate > 0.0) || config.alpha < 0.0 || config.alpha >= 1.0 || config.eps < 0.0) {
        throw ConfigError("rmsprop: need learning_rate > 0, 0 <= alpha < 1, eps >= 0");
    }
}

void Rmsprop::step(std::span<double> params, std::span<const double> grads)
{
    if (params.size() != square_avg_.size() || grads.size() != square_avg_.size()) {
        throw ConfigError("rmsprop: expected " + std::to_string(square_avg_.size()) + " parameters, got " +
                          std::to_string(params.size()) + " params and " + std::to_string(grads.size()) + " grads");
    }
    const double a = config_.alpha;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        square_avg_[i] = a * square_avg_[i] + (1.0 - a) * g * g;
        if (g != 0.0) {
            params[i] -= config_.learning_rate * g / std::sqrt(square_avg_[i] + config_.eps);
        }
    }
}

double clip_grad_norm(std::span<double> grads, double max_norm)
{
    double sq = 0.0;
    for (double g : grads) {
        sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (double& g : grads) {
            g *= s;
        }
    }
    return norm;
}

}  // namespace cmarl::numerics
