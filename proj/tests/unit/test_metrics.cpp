#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cmarl/common/error.hpp"
#include "cmarl/metrics/curves.hpp"
#include "cmarl/metrics/stability.hpp"

using namespace cmarl;
using namespace cmarl::metrics;
namespace fs = std::filesystem;

namespace {

constexpr Smoother all_smoothers[] = {Smoother::ema, Smoother::dema, Smoother::midpoint, Smoother::kalman};

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("cmarl_metrics_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_run(const fs::path& dir, const std::string& config, std::uint64_t seed, const std::vector<double>& returns)
{
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << "{\"name\":\"" << config << "\",\"seed\":" << seed << "}";
    MetricsWriter w{dir / "metrics.csv"};
    for (std::size_t k = 0; k < returns.size(); ++k) {
        MetricsRow row;
        row.wall_clock_s = static_cast<double>(k + 1);
        row.env_steps_total = 100 * (k + 1);
        row.eval_mean_return = returns[k];
        row.kl_mean_per_container = {0.1, 0.2};
        row.buffer_sizes = {5, 6, 7};
        w.write(row);
    }
}

}  // namespace

TEST_CASE("constant curves are their own smoothing")
{
    const std::vector<double> flat(25, 3.5);
    for (Smoother s : all_smoothers) {
        CHECK(stability_distance(flat, s) < 1e-12);
    }
}

TEST_CASE("EMA residuals on a ten point curve")
{
    const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6, 5, 3};
    // Written-out recurrence, independent of the library.
    for (double a : {0.1, 0.3, 0.75}) {
        double level = x[0];
        double sum = 0.0;
        for (std::size_t t = 1; t < x.size(); ++t) {
            level = a * x[t] + (1.0 - a) * level;
            sum += (x[t] - level) * (x[t] - level);
        }
        SmootherParams p;
        p.ema_factor = a;
        CHECK(std::abs(stability_distance(x, Smoother::ema, p) - std::sqrt(sum)) < 1e-9);
    }
    CHECK(std::abs(stability_distance(x, Smoother::ema) - 7.1107508138389415) < 1e-9);
    SmootherParams p;
    p.ema_factor = 0.3;
    CHECK(std::abs(stability_distance(x, Smoother::ema, p) - 5.74017793099132) < 1e-9);
}

TEST_CASE("EMA with factor one reproduces the raw curve")
{
    std::mt19937_64 rng{3};
    std::normal_distribution<double> n;
    std::vector<double> x(40);
    for (auto& v : x) v = n(rng);
    SmootherParams p;
    p.ema_factor = 1.0;
    CHECK(stability_distance(x, Smoother::ema, p) == 0.0);
}

TEST_CASE("alternating noise around a line gives a distance near sqrt(T)")
{
    for (std::size_t T : {50u, 200u, 1000u}) {
        std::vector<double> x(T);
        for (std::size_t t = 0; t < T; ++t) x[t] = 2.0 + 0.001 * static_cast<double>(t) + (t % 2 ? 1.0 : -1.0);
        for (std::size_t w : {4u, 5u, 6u, 9u}) {
            SmootherParams p;
            p.midpoint_window = w;
            const double d = stability_distance(x, Smoother::midpoint, p);
            CHECK(std::abs(d - std::sqrt(static_cast<double>(T))) < 0.1 * std::sqrt(static_cast<double>(T)));
        }
    }
}

TEST_CASE("DEMA follows a ramp without steady-state lag")
{
    // Only the start-up transient contributes, so the total distance settles and
    // the per-point residual vanishes.
    std::vector<double> distance;
    for (std::size_t T : {200u, 800u, 3200u}) {
        std::vector<double> x(T);
        for (std::size_t t = 0; t < T; ++t) x[t] = 0.5 * static_cast<double>(t);
        const auto fit = smooth(x, Smoother::dema);
        CHECK(std::abs(fit.back() - x.back()) < 1e-6);
        distance.push_back(stability_distance(x, Smoother::dema));
    }
    CHECK(distance[2] == doctest::Approx(distance[1]).epsilon(1e-9));
    CHECK(distance[2] / std::sqrt(3200.0) < 0.5 * distance[0] / std::sqrt(200.0));

    // Plain EMA keeps a lag of (1 - a) / a times the slope.
    std::vector<double> ramp(400);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = 0.5 * static_cast<double>(t);
    CHECK(ramp.back() - smooth(ramp, Smoother::ema).back() == doctest::Approx(4.5).epsilon(1e-6));
}

TEST_CASE("offsets do not change the distance")
{
    std::mt19937_64 rng{9};
    std::normal_distribution<double> n;
    std::vector<double> x(60);
    for (auto& v : x) v = n(rng);
    std::vector<double> shifted(x);
    for (auto& v : shifted) v += 123.25;
    for (Smoother s : {Smoother::ema, Smoother::dema, Smoother::midpoint}) {
        CHECK(stability_distance(shifted, s) == doctest::Approx(stability_distance(x, s)).epsilon(1e-9));
    }
}

TEST_CASE("Kalman smoothing equals the least-squares level path")
{
    std::mt19937_64 rng{21};
    std::normal_distribution<double> n;
    const std::size_t T = 30;
    std::vector<double> x(T);
    for (std::size_t t = 0; t < T; ++t) x[t] = std::sin(0.2 * static_cast<double>(t)) + 0.3 * n(rng);
    for (double ratio : {0.01, 0.5, 10.0}) {
        // Minimize sum (x_t - m_t)^2 + (m_0 - x_0)^2 + sum (m_t - m_{t-1})^2 / ratio.
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(T, T);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(T);
        for (std::size_t t = 0; t < T; ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            A(i, i) += 1.0;
            b(i) += x[t];
        }
        A(0, 0) += 1.0;
        b(0) += x[0];
        for (std::size_t t = 1; t < T; ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            A(i, i) += 1.0 / ratio;
            A(i - 1, i - 1) += 1.0 / ratio;
            A(i, i - 1) -= 1.0 / ratio;
            A(i - 1, i) -= 1.0 / ratio;
        }
        const Eigen::VectorXd m = A.ldlt().solve(b);
        SmootherParams p;
        p.kalman_ratio = ratio;
        const auto fit = smooth(x, Smoother::kalman, p);
        for (std::size_t t = 0; t < T; ++t) {
            CHECK(fit[t] == doctest::Approx(m(static_cast<Eigen::Index>(t))).epsilon(1e-9));
        }
    }
}

TEST_CASE("averaging over curves and argument errors")
{
    const std::vector<double> a{1, 2, 1, 2, 1};
    const std::vector<double> b{0, 5, 0, 5, 0, 5};
    const double mean = mean_stability_distance({a, b}, Smoother::midpoint);
    CHECK(mean == doctest::Approx((stability_distance(a, Smoother::midpoint) +
                                   stability_distance(b, Smoother::midpoint)) / 2.0));
    CHECK_THROWS_AS(parse_smoother("savgol"), ConfigError);
    CHECK(parse_smoother("kalman") == Smoother::kalman);
    CHECK_THROWS_AS(stability_distance(std::vector<double>{1.0}, Smoother::ema), ContractViolation);
    SmootherParams bad;
    bad.ema_factor = 0.0;
    CHECK_THROWS_AS(stability_distance(a, Smoother::ema, bad), ConfigError);
}

TEST_CASE("report over run directories")
{
    const auto root = scratch("report");
    write_run(root / "solo" / "seed_1", "solo", 1, {0.0, 2.0, 4.0, 5.0});
    auto rows = curve_report(root / "solo");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].seeds == 1);
    CHECK(rows[0].median_final_return == 5.0);
    CHECK(rows[0].median_at_time[1] == 2.0);

    const std::vector<double> finals{3.0, 9.0, 1.0, 7.0, 4.0};
    for (std::size_t s = 0; s < finals.size(); ++s) {
        const std::vector<double> curve{0.0, 1.0, finals[s]};
        write_run(root / "all" / "first" / ("seed_" + std::to_string(s)), "first", s, curve);
        write_run(root / "all" / "second" / ("seed_" + std::to_string(s)), "second", s, curve);
    }
    rows = curve_report(root / "all");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].config == "first");
    CHECK(rows[0].seeds == 5);
    CHECK(rows[0].median_final_return == 4.0);
    CHECK(rows[0].median_final_return == rows[1].median_final_return);
    CHECK(rows[0].variance_final_return == rows[1].variance_final_return);
    CHECK(rows[0].mean_stability == rows[1].mean_stability);
    CHECK(rows[0].median_at_time == rows[1].median_at_time);
    CHECK(report_markdown(rows, Smoother::ema).find("| first | 5 |") != std::string::npos);

    const auto bad = root / "bad" / "x" / "seed_0";
    fs::create_directories(bad);
    std::ofstream(bad / "metrics.csv") << "step,value\n1,2\n";
    try {
        curve_report(root / "bad");
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find((bad / "metrics.csv").string()) != std::string::npos);
    }
    CHECK_THROWS_AS(curve_report(root / "nothing"), ConfigError);

    // Resume markers are skipped.
    MetricsWriter again{root / "solo" / "seed_1" / "metrics.csv", "resumed"};
    MetricsRow row;
    row.wall_clock_s = 10.0;
    row.eval_mean_return = 6.0;
    again.write(row);
    CHECK(read_run(root / "solo" / "seed_1" / "metrics.csv").eval_return.size() == 5);
    fs::remove_all(root);
}
