#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cmarl::numerics {

struct RmspropConfig {
    double learning_rate = 5e-4;
    double alpha = 0.99;
    double eps = 1e-5;
};

// RMSprop without momentum or weight decay:
//   s <- alpha * s + (1 - alpha) * g^2
//   p <- p - lr * g / sqrt(s + eps)
class Rmsprop {
public:
    Rmsprop() = default;
    Rmsprop(RmspropConfig config, std::size_t n_params);

    void step(std::span<double> params, std::span<const double> grads);

    const RmspropConfig& config() const noexcept { return config_; }
    const std::vector<double>& square_avg() const noexcept { return square_avg_; }
    std::vector<double>& square_avg() noexcept { return square_avg_; }

private:
    RmspropConfig config_;
    std::vector<double> square_avg_;
};

// Rescales `grads` in place so that its L2 norm is at most `max_norm`; returns the original norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

}  // namespace cmarl::numerics
