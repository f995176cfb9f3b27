#include "cmarl/metrics/curves.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cmarl/centralizer/evaluate.hpp"
#include "cmarl/common/error.hpp"

namespace cmarl::metrics {

namespace fs = std::filesystem;

const std::vector<std::string>& metrics_columns()
{
    static const std::vector<std::string> columns{
        "wall_clock_s",      "env_steps_total",  "eval_mean_return", "eval_median_return",
        "td_loss",           "kl_mean_per_container", "policy_divergence", "buffer_sizes",
        "dropped_episodes",  "central_updates",  "broadcast_version"};
    return columns;
}

namespace {

template <typename T>
std::string join(const std::vector<T>& values)
{
    std::ostringstream s;
    s << std::setprecision(10);
    for (std::size_t k = 0; k < values.size(); ++k) {
        s << (k ? ";" : "") << values[k];
    }
    return s.str();
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::string header_line()
{
    const auto& cols = metrics_columns();
    std::string h;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        h += (k ? "," : "") + cols[k];
    }
    return h;
}

double number(const std::string& cell, const fs::path& file, std::size_t line, const std::string& column)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) {
            throw std::invalid_argument(cell);
        }
        return v;
    } catch (const std::exception&) {
        throw SchemaError(file.string() + ":" + std::to_string(line) + ": column " + column +
                          " is not a number: '" + cell + "'");
    }
}

}  // namespace

MetricsWriter::MetricsWriter(const fs::path& path, const std::string& marker)
{
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) {
        throw ConfigError("cannot open " + path.string() + " for writing");
    }
    if (fresh) {
        out_ << header_line() << '\n';
    } else if (!marker.empty()) {
        out_ << "# " << marker << '\n';
    }
    out_.flush();
}

void MetricsWriter::write(const MetricsRow& row)
{
    out_ << std::setprecision(10) << row.wall_clock_s << ',' << row.env_steps_total << ',' << row.eval_mean_return
         << ',' << row.eval_median_return << ',' << row.td_loss << ',' << join(row.kl_mean_per_container) << ','
         << row.policy_divergence << ',' << join(row.buffer_sizes) << ',' << row.dropped_episodes << ','
         << row.central_updates << ',' << row.broadcast_version << '\n';
    out_.flush();
}

double RunCurve::return_at_time_fraction(double fraction) const
{
    if (eval_return.empty()) {
        return 0.0;
    }
    const double total = wall_clock_s.back();
    double value = eval_return.front();
    for (std::size_t k = 0; k < eval_return.size(); ++k) {
        if (wall_clock_s[k] <= fraction * total + 1e-12) {
            value = eval_return[k];
        }
    }
    return value;
}

double RunCurve::divergence_at_step_fraction(double fraction) const
{
    if (policy_divergence.empty()) {
        return 0.0;
    }
    const double total = env_steps.back();
    double value = policy_divergence.front();
    for (std::size_t k = 0; k < policy_divergence.size(); ++k) {
        if (env_steps[k] <= fraction * total + 1e-12) {
            value = policy_divergence[k];
        }
    }
    return value;
}

RunCurve read_run(const fs::path& metrics_csv)
{
    std::ifstream in(metrics_csv);
    if (!in) {
        throw SchemaError(metrics_csv.string() + ": cannot be opened");
    }
    RunCurve run;
    run.file = metrics_csv;
    const auto dir = metrics_csv.parent_path();
    run.config = dir.parent_path().filename().string();
    const auto seed_dir = dir.filename().string();
    if (seed_dir.rfind("seed_", 0) == 0) {
        try {
            run.seed = std::stoull(seed_dir.substr(5));
        } catch (const std::exception&) {
        }
    }
    const auto config_path = dir / "config.json";
    if (fs::exists(config_path)) {
        std::ifstream cfg(config_path);
        try {
            const auto j = nlohmann::json::parse(cfg);
            if (j.contains("name") && j["name"].is_string()) run.config = j["name"];
            if (j.contains("seed") && j["seed"].is_number_unsigned()) run.seed = j["seed"];
            if (j.contains("seeds") && j["seeds"].is_array() && j["seeds"].size() == 1) run.seed = j["seeds"][0];
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(config_path.string() + ": " + e.what());
        }
    }

    const auto& cols = metrics_columns();
    const auto index = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
    };
    const std::size_t c_time = index("wall_clock_s"), c_steps = index("env_steps_total"),
                      c_ret = index("eval_mean_return"), c_div = index("policy_divergence");

    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header) {
            if (line != header_line()) {
                throw SchemaError(metrics_csv.string() + ": unexpected header '" + line + "', expected '" +
                                  header_line() + "'");
            }
            header = true;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != cols.size()) {
            throw SchemaError(metrics_csv.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(cols.size()) + " columns, found " + std::to_string(cells.size()));
        }
        run.wall_clock_s.push_back(number(cells[c_time], metrics_csv, line_no, cols[c_time]));
        run.env_steps.push_back(number(cells[c_steps], metrics_csv, line_no, cols[c_steps]));
        run.eval_return.push_back(number(cells[c_ret], metrics_csv, line_no, cols[c_ret]));
        run.policy_divergence.push_back(number(cells[c_div], metrics_csv, line_no, cols[c_div]));
    }
    if (!header) {
        throw SchemaError(metrics_csv.string() + ": missing header");
    }
    return run;
}

std::vector<RunCurve> find_runs(const fs::path& root)
{
    std::vector<fs::path> files;
    if (fs::is_regular_file(root)) {
        files.push_back(root);
    } else if (fs::is_directory(root)) {
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RunCurve> runs;
    for (const auto& f : files) {
        runs.push_back(read_run(f));
    }
    return runs;
}

std::vector<ReportRow> curve_report(const fs::path& root, Smoother smoother, const SmootherParams& params)
{
    const auto runs = find_runs(root);
    if (runs.empty()) {
        throw ConfigError("no metrics.csv found under " + root.string());
    }
    std::map<std::string, std::vector<const RunCurve*>> groups;
    for (const auto& r : runs) {
        groups[r.config].push_back(&r);
    }
    std::vector<ReportRow> rows;
    for (const auto& [name, members] : groups) {
        ReportRow row;
        row.config = name;
        row.seeds = members.size();
        std::vector<double> finals;
        double stability = 0.0;
        std::size_t stable_count = 0;
        for (const RunCurve* r : members) {
            finals.push_back(r->final_return());
            if (r->eval_return.size() >= 2) {
                stability += stability_distance(r->eval_return, smoother, params);
                ++stable_count;
            }
        }
        row.median_final_return = centralizer::median(finals);
        double mean = 0.0;
        for (double f : finals) mean += f;
        mean /= static_cast<double>(finals.size());
        double var = 0.0;
        for (double f : finals) var += (f - mean) * (f - mean);
        row.variance_final_return = finals.size() > 1 ? var / static_cast<double>(finals.size() - 1) : 0.0;
        row.mean_stability = stable_count ? stability / static_cast<double>(stable_count) : 0.0;
        for (double fraction : report_time_fractions) {
            std::vector<double> at;
            for (const RunCurve* r : members) at.push_back(r->return_at_time_fraction(fraction));
            row.median_at_time.push_back(centralizer::median(at));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string report_markdown(const std::vector<ReportRow>& rows, Smoother smoother)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(4);
    s << "| config | seeds | median final return | variance | stability (" << smoother_name(smoother) << ")";
    for (double f : report_time_fractions) s << " | median @" << static_cast<int>(f * 100) << "% time";
    s << " |\n|---|---|---|---|---";
    for (std::size_t k = 0; k < std::size(report_time_fractions); ++k) s << "|---";
    s << "|\n";
    for (const auto& r : rows) {
        s << "| " << r.config << " | " << r.seeds << " | " << r.median_final_return << " | "
          << r.variance_final_return << " | " << r.mean_stability;
        for (double v : r.median_at_time) s << " | " << v;
        s << " |\n";
    }
    return s.str();
}

std::string report_csv(const std::vector<ReportRow>& rows)
{
    std::ostringstream s;
    s << std::setprecision(10);
    s << "config,seeds,median_final_return,variance_final_return,mean_stability";
    for (double f : report_time_fractions) s << ",median_at_" << static_cast<int>(f * 100) << "pct_time";
    s << '\n';
    for (const auto& r : rows) {
        s << r.config << ',' << r.seeds << ',' << r.median_final_return << ',' << r.variance_final_return << ','
          << r.mean_stability;
        for (double v : r.median_at_time) s << ',' << v;
        s << '\n';
    }
    return s.str();
}

}  // namespace cmarl::metrics
