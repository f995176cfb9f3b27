#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace cmarl::metrics {

enum class Smoother { ema, dema, midpoint, kalman };

// Throws ConfigError for anything but ema, dema, midpoint or kalman.
Smoother parse_smoother(std::string_view name);
const char* smoother_name(Smoother s) noexcept;

struct SmootherParams {
    double ema_factor = 0.1;        // weight of the newest point
    std::size_t midpoint_window = 5; // trailing window, truncated at the start
    double kalman_ratio = 0.01;     // process noise over observation noise
};

// EMA starts at the first point. DEMA is 2*EMA - EMA(EMA). The Kalman variant is a
// forward filter plus backward (RTS) pass over a constant-level model.
std::vector<double> smooth(std::span<const double> curve, Smoother smoother, const SmootherParams& params = {});

// sqrt(sum_t (x_t - smoothed_t)^2). Curves need at least two points.
double stability_distance(std::span<const double> curve, Smoother smoother, const SmootherParams& params = {});
double mean_stability_distance(const std::vector<std::vector<double>>& curves, Smoother smoother,
                               const SmootherParams& params = {});

}  // namespace cmarl::metrics
