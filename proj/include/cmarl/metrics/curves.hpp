#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cmarl/metrics/stability.hpp"

namespace cmarl::metrics {

// Header of every metrics.csv. List-valued cells separate entries with ';'.
// Lines starting with '#' are markers (for example a resume) and carry no data.
const std::vector<std::string>& metrics_columns();

struct MetricsRow {
    double wall_clock_s = 0.0;
    std::uint64_t env_steps_total = 0;
    double eval_mean_return = 0.0;
    double eval_median_return = 0.0;
    double td_loss = 0.0;
    std::vector<double> kl_mean_per_container;
    double policy_divergence = 0.0;
    std::vector<std::size_t> buffer_sizes;  // central first, then containers
    std::uint64_t dropped_episodes = 0;
    std::uint64_t central_updates = 0;
    std::uint64_t broadcast_version = 0;
};

class MetricsWriter {
public:
    // A new file gets the header; an existing one is appended to, after `marker` if given.
    MetricsWriter(const std::filesystem::path& path, const std::string& marker = {});

    void write(const MetricsRow& row);

private:
    std::ofstream out_;
};

struct RunCurve {
    std::filesystem::path file;
    std::string config;
    std::uint64_t seed = 0;
    std::vector<double> wall_clock_s;
    std::vector<double> env_steps;
    std::vector<double> eval_return;
    std::vector<double> policy_divergence;

    double final_return() const { return eval_return.empty() ? 0.0 : eval_return.back(); }
    // Return of the last row at or before `fraction` of the run's wall clock.
    double return_at_time_fraction(double fraction) const;
    // Same, on the environment-step axis.
    double divergence_at_step_fraction(double fraction) const;
};

// Config name and seed come from config.json next to the CSV, falling back to
// the directory names. Throws SchemaError naming the file on a bad header or row.
RunCurve read_run(const std::filesystem::path& metrics_csv);
std::vector<RunCurve> find_runs(const std::filesystem::path& root);

struct ReportRow {
    std::string config;
    std::size_t seeds = 0;
    double median_final_return = 0.0;
    double variance_final_return = 0.0;
    double mean_stability = 0.0;
    // Median across seeds of the return at 25/50/75/100% of each run's training time.
    std::vector<double> median_at_time;
};

inline constexpr double report_time_fractions[] = {0.25, 0.5, 0.75, 1.0};

// One row per config name, sorted by name. Throws ConfigError when no run is found.
std::vector<ReportRow> curve_report(const std::filesystem::path& root, Smoother smoother = Smoother::ema,
                                    const SmootherParams& params = {});
std::string report_markdown(const std::vector<ReportRow>& rows, Smoother smoother);
std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace cmarl::metrics
