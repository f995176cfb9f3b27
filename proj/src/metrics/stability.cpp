#include "cmarl/metrics/stability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmarl/common/error.hpp"

namespace cmarl::metrics {

Smoother parse_smoother(std::string_view name)
{
    if (name == "ema") return Smoother::ema;
    if (name == "dema") return Smoother::dema;
    if (name == "midpoint") return Smoother::midpoint;
    if (name == "kalman") return Smoother::kalman;
    throw ConfigError("unknown smoother '" + std::string(name) + "' (expected ema, dema, midpoint or kalman)");
}

const char* smoother_name(Smoother s) noexcept
{
    switch (s) {
    case Smoother::ema: return "ema";
    case Smoother::dema: return "dema";
    case Smoother::midpoint: return "midpoint";
    case Smoother::kalman: return "kalman";
    }
    return "?";
}

namespace {

std::vector<double> ema(std::span<const double> x, double a)
{
    std::vector<double> out(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        out[t] = t == 0 ? x[0] : a * x[t] + (1.0 - a) * out[t - 1];
    }
    return out;
}

std::vector<double> midpoint(std::span<const double> x, std::size_t window)
{
    std::vector<double> out(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        const std::size_t from = t + 1 >= window ? t + 1 - window : 0;
        const auto [lo, hi] = std::minmax_element(x.begin() + static_cast<std::ptrdiff_t>(from),
                                                  x.begin() + static_cast<std::ptrdiff_t>(t) + 1);
        out[t] = 0.5 * (*lo + *hi);
    }
    return out;
}

std::vector<double> kalman(std::span<const double> x, double ratio)
{
    const std::size_t n = x.size();
    const double q = ratio;
    const double r = 1.0;
    std::vector<double> mean(n), var(n), prior_var(n);
    double m = x[0];
    double p = r;
    for (std::size_t t = 0; t < n; ++t) {
        const double pp = t == 0 ? p : p + q;
        const double gain = pp / (pp + r);
        m = m + gain * (x[t] - m);
        p = (1.0 - gain) * pp;
        prior_var[t] = pp;
        mean[t] = m;
        var[t] = p;
    }
    std::vector<double> out(mean);
    for (std::size_t t = n - 1; t-- > 0;) {
        const double c = var[t] / prior_var[t + 1];
        out[t] = mean[t] + c * (out[t + 1] - mean[t]);
    }
    return out;
}

}  // namespace

std::vector<double> smooth(std::span<const double> curve, Smoother smoother, const SmootherParams& params)
{
    if (curve.empty()) {
        return {};
    }
    switch (smoother) {
    case Smoother::ema:
        if (!(params.ema_factor > 0.0 && params.ema_factor <= 1.0)) {
            throw ConfigError("ema factor must lie in (0, 1]");
        }
        return ema(curve, params.ema_factor);
    case Smoother::dema: {
        if (!(params.ema_factor > 0.0 && params.ema_factor <= 1.0)) {
            throw ConfigError("ema factor must lie in (0, 1]");
        }
        auto once = ema(curve, params.ema_factor);
        const auto twice = ema(once, params.ema_factor);
        for (std::size_t t = 0; t < once.size(); ++t) {
            once[t] = 2.0 * once[t] - twice[t];
        }
        return once;
    }
    case Smoother::midpoint:
        if (params.midpoint_window == 0) {
            throw ConfigError("midpoint window must be at least 1");
        }
        return midpoint(curve, params.midpoint_window);
    case Smoother::kalman:
        if (!(params.kalman_ratio > 0.0)) {
            throw ConfigError("kalman noise ratio must be positive");
        }
        return kalman(curve, params.kalman_ratio);
    }
    throw ConfigError("unknown smoother");
}

double stability_distance(std::span<const double> curve, Smoother smoother, const SmootherParams& params)
{
    if (curve.size() < 2) {
        throw ContractViolation("stability distance needs a curve of at least two points");
    }
    const auto fit = smooth(curve, smoother, params);
    double sum = 0.0;
    for (std::size_t t = 0; t < curve.size(); ++t) {
        const double e = curve[t] - fit[t];
        sum += e * e;
    }
    return std::sqrt(sum);
}

double mean_stability_distance(const std::vector<std::vector<double>>& curves, Smoother smoother,
                               const SmootherParams& params)
{
    if (curves.empty()) {
        throw ContractViolation("no curves to average");
    }
    double total = 0.0;
    for (const auto& c : curves) {
        total += stability_distance(c, smoother, params);
    }
    return total / static_cast<double>(curves.size());
}

}  // namespace cmarl::metrics
