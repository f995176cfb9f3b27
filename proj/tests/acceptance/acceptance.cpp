#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "support/fabricate.hpp"
#include "support/finite_difference.hpp"
#include "support/queue_fabric.hpp"
#include "cmarl/centralizer/evaluate.hpp"
#include "cmarl/common/log.hpp"
#include "cmarl/container/runtime.hpp"
#include "cmarl/metrics/curves.hpp"
#include "cmarl/metrics/stability.hpp"
#include "cmarl/replay/buffer.hpp"
#include "cmarl/replay/priority.hpp"
#include "cmarl/runner/deterministic.hpp"
#include "cmarl/runner/parallel.hpp"
#include "cmarl/runner/setup.hpp"
#include "cmarl/valuefn/loss.hpp"
#include "cmarl/valuefn/mixer.hpp"

using namespace cmarl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets, fixed here so a run cannot loosen them.
constexpr double gradient_rel_tol = 1e-4;
constexpr double gradient_abs_floor = 1e-8;
constexpr int monotone_trials = 1000;
constexpr double monotone_floor = -1e-9;
constexpr std::size_t priority_draws = 100000;
constexpr double priority_freq_tol = 0.01;
constexpr double identity_tol = 1e-12;
constexpr double closed_form_tol = 1e-9;
constexpr std::size_t fabric_events = 10000;
constexpr double enqueue_p99_limit_s = 1e-3;
constexpr double throughput_ratio_floor = 0.9;
constexpr double collection_phase_s = 30.0;
constexpr double climb_optimum = 10.0;
constexpr std::size_t seeds_needed = 4;
constexpr double climb_wall_limit_s = 600.0;
constexpr double disperse_floor = -1.0;
constexpr double disperse_wall_limit_s = 1800.0;
constexpr double divergence_fraction = 0.2;
constexpr double divergence_ratio = 5.0;
constexpr double scaling_budget_s = 600.0;
constexpr double scaling_steps_ratio = 2.5;
constexpr double stability_tol = 1e-9;
constexpr double fault_at_s = 15.0;
constexpr double fault_for_s = 10.0;
constexpr double fault_run_s = 45.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4)
{
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

std::vector<const replay::Trajectory*> pointers(const std::vector<replay::Trajectory>& v)
{
    std::vector<const replay::Trajectory*> out;
    for (const auto& t : v) out.push_back(&t);
    return out;
}

fs::path source_root() { return CMARL_SOURCE_ROOT; }

struct Context {
    fs::path work;
    fs::path exe;
};

Outcome gradients(const Context&)
{
    using namespace valuefn;
    const NetDims d{2, 3, 3, 4, 5, 4};
    numerics::Rng rng{2024};
    numerics::ParamSet online = init_params(d, rng);
    const numerics::ParamSet target = init_params(d, rng);
    std::vector<numerics::ParamSet> siblings{init_params(d, rng).subset(head_prefix),
                                            init_params(d, rng).subset(head_prefix)};
    std::vector<replay::Trajectory> eps{testing::fabricate_trajectory(d, 2, rng),
                                        testing::fabricate_trajectory(d, 2, rng, true)};
    const auto batch = pointers(eps);

    const auto td = [&] { return qmix_loss(online, target, d, batch, {}, Trainable::everything); };
    const auto td_report = testing::compare_gradients(
        td().grad, testing::central_differences(online.flat(), [&] { return td().total; }), gradient_rel_tol,
        gradient_abs_floor);

    LossConfig cfg;
    cfg.diversity = true;
    cfg.beta = 0.3;
    cfg.lambda = 0.2;
    const auto div = [&] { return qmix_loss(online, target, d, batch, cfg, Trainable::head_and_mixer, siblings); };
    const auto analytic = div().grad;
    const auto numeric = testing::central_differences(online.flat(), [&] { return div().total; });
    testing::GradientReport div_report;
    for (const auto& e : online.entries()) {
        if (e.name.starts_with(shared_prefix)) continue;
        const auto r = testing::compare_gradients(std::span<const double>(analytic).subspan(e.offset, e.size),
                                                  std::span<const double>(numeric).subspan(e.offset, e.size),
                                                  gradient_rel_tol, gradient_abs_floor);
        div_report.checked += r.checked;
        div_report.mismatches += r.mismatches;
        div_report.worst_rel = std::max(div_report.worst_rel, r.worst_rel);
        div_report.worst_abs = std::max(div_report.worst_abs, r.worst_abs);
    }
    return {td_report.mismatches == 0 && div_report.mismatches == 0 && td_report.worst_rel < gradient_rel_tol &&
                div_report.worst_rel < gradient_rel_tol,
            "TD loss: worst rel " + fmt(td_report.worst_rel) + ", worst abs " + fmt(td_report.worst_abs) + " over " +
                std::to_string(td_report.checked) + " params; diversity loss: worst rel " + fmt(div_report.worst_rel) +
                ", worst abs " + fmt(div_report.worst_abs) + " over " + std::to_string(div_report.checked)};
}

Outcome monotone(const Context&)
{
    using namespace valuefn;
    const NetDims d{3, 3, 4, 6, 8, 6};
    numerics::Rng rng{321};
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < monotone_trials; ++trial) {
        const auto p = init_params(d, rng);
        std::vector<double> q(d.n_agents), s(d.state_dim);
        for (double& v : q) v = u(rng);
        for (double& v : s) v = u(rng);
        for (std::size_t i = 0; i < d.n_agents; ++i) {
            const auto fd = testing::central_differences(std::span<double>(&q[i], 1), [&] { return mix(q, s, p, d); });
            worst = std::min(worst, fd[0]);
        }
    }
    return {worst >= monotone_floor, "smallest dQtot/dq over " + std::to_string(monotone_trials) + " trials: " +
                                         fmt(worst)};
}

Outcome priorities(const Context&)
{
    std::size_t exact = 0, total = 0;
    const auto direct = [](double r, double lo, double hi, double eps) { return (r - lo) / (hi - lo) + eps; };
    for (const auto& [lo, hi] : std::vector<std::pair<double, double>>{{0, 10}, {-50, 5}, {-1, 1}, {3, 4}}) {
        for (double r : {lo, hi}) {
            ++total;
            exact += replay::compute_priority(r, lo, hi, 0.01) == direct(r, lo, hi, 0.01) ? 1 : 0;
        }
    }
    numerics::Rng rng{77};
    std::uniform_real_distribution<double> u(-100.0, 100.0), f(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        double lo = u(rng), hi = u(rng);
        if (lo == hi) continue;
        if (lo > hi) std::swap(lo, hi);
        const double r = lo + (hi - lo) * f(rng);
        ++total;
        exact += replay::compute_priority(r, lo, hi, 0.01) == direct(r, lo, hi, 0.01) ? 1 : 0;
    }

    replay::PrioritizedBuffer buf{16};
    std::vector<double> p{0.01, 0.5, 1.01, 0.2, 0.7, 0.33, 0.9, 0.05};
    double mass = 0.0;
    for (std::uint64_t k = 0; k < p.size(); ++k) {
        auto t = std::make_shared<replay::Trajectory>();
        t->uid = k;
        t->priority = p[k];
        buf.insert(t);
        mass += p[k];
    }
    std::vector<double> counts(p.size(), 0.0);
    for (const auto& t : buf.sample(priority_draws, rng)) counts[t->uid] += 1.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        worst = std::max(worst, std::abs(counts[k] / priority_draws - p[k] / mass));
    }
    return {exact == total && worst <= priority_freq_tol,
            std::to_string(exact) + "/" + std::to_string(total) + " formula values exact, worst frequency error " +
                fmt(worst)};
}

Outcome identities(const Context&)
{
    using namespace valuefn;
    const NetDims d{2, 3, 3, 4, 5, 4};
    numerics::Rng rng{31};
    const auto online = init_params(d, rng);
    std::vector<replay::Trajectory> eps{testing::fabricate_trajectory(d, 3, rng)};
    const auto batch = pointers(eps);
    LossConfig div;
    div.diversity = true;
    const double td = qmix_loss(online, online, d, batch, {}, Trainable::head_and_mixer).td;
    const double expected = td + div.beta * div.lambda * div.lambda;

    const auto alone = qmix_loss(online, online, d, batch, div, Trainable::head_and_mixer);
    const std::vector<numerics::ParamSet> same{online.subset(head_prefix), online.subset(head_prefix)};
    const auto twins = qmix_loss(online, online, d, batch, div, Trainable::head_and_mixer, same);

    const NetDims one{1, 2, 1, 1, 2, 0};
    auto sharp = make_params(one);
    sharp.set("head.fc_out.b", numerics::Tensor::row({1000.0, 0.0}));
    const std::vector<numerics::ParamSet> uniform{make_params(one).subset(head_prefix)};
    std::vector<replay::Trajectory> single{testing::fabricate_trajectory(one, 1, rng)};
    const auto pair = qmix_loss(sharp, sharp, one, pointers(single), div, Trainable::head_and_mixer, uniform);
    const double closed = std::abs(pair.kl_mean - std::log(4.0 / 3.0));

    const double worst = std::max({std::abs(alone.kl_mean), std::abs(twins.kl_mean), std::abs(alone.total - expected),
                                   std::abs(twins.total - expected)});
    return {worst <= identity_tol && closed <= closed_form_tol,
            "identity deviation " + fmt(worst) + ", two-policy KL off log(4/3) by " + fmt(closed)};
}

Outcome fabric(const Context&)
{
    std::uint64_t generated = 0, duplicates = 0, strays = 0;
    bool balanced = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto t = testing::run_queue_fabric(4, 3, fabric_events, seed, false);
        balanced = balanced && t.queued == 0 && t.generated == t.forwarded + t.accumulated + t.dropped;
        generated += t.generated;
        duplicates += t.duplicates;
        strays += t.strays;
    }
    return {balanced && duplicates == 0 && strays == 0,
            "5 schedules of " + std::to_string(fabric_events) + " events, " + std::to_string(generated) +
                " episodes, duplicates " + std::to_string(duplicates) + ", strays " + std::to_string(strays) +
                (balanced ? ", all balanced" : ", UNBALANCED")};
}

struct CollectionPhase {
    double episodes_per_s = 0.0;
    double p99_s = 0.0;
    std::uint64_t learner_steps = 0;
};

CollectionPhase collect(bool with_learner)
{
    runner::RunConfig config;
    config.env = {{"name", "gather"}};
    std::vector<std::unique_ptr<container::ContainerRuntime>> runtimes;
    for (std::uint32_t c = 0; c < 3; ++c) {
        container::RuntimeOptions options;
        options.learner = with_learner;
        options.record_latency = true;
        options.head_upload_every_s = 1e9;
        runtimes.push_back(
            std::make_unique<container::ContainerRuntime>(runner::container_config(config, 1, c), options));
    }
    const auto start = Clock::now();
    for (auto& r : runtimes) r->start();
    std::this_thread::sleep_for(std::chrono::duration<double>(collection_phase_s));
    std::uint64_t episodes = 0;
    for (auto& r : runtimes) episodes += r->episodes();
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    CollectionPhase out;
    std::vector<double> lat;
    for (auto& r : runtimes) {
        r->stop();
        const auto l = r->enqueue_latencies();
        lat.insert(lat.end(), l.begin(), l.end());
        out.learner_steps += r->learner_steps();
    }
    out.episodes_per_s = static_cast<double>(episodes) / elapsed;
    if (!lat.empty()) {
        const std::size_t k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(lat.size()))) - 1;
        std::nth_element(lat.begin(), lat.begin() + static_cast<std::ptrdiff_t>(k), lat.end());
        out.p99_s = lat[k];
    }
    return out;
}

Outcome collection(const Context&)
{
    const auto baseline = collect(false);
    const auto loaded = collect(true);
    const double ratio = loaded.episodes_per_s / baseline.episodes_per_s;
    return {loaded.p99_s < enqueue_p99_limit_s && ratio >= throughput_ratio_floor,
            "enqueue p99 " + fmt(loaded.p99_s * 1e3) + " ms, " + fmt(loaded.episodes_per_s) + " vs " +
                fmt(baseline.episodes_per_s) + " episodes/s without learner (ratio " + fmt(ratio) + ", " +
                std::to_string(loaded.learner_steps) + " learner steps), " +
                std::to_string(std::thread::hardware_concurrency()) + " cores"};
}

struct Sweep {
    std::vector<runner::RunSummary> runs;
    double wall_s = 0.0;
    std::size_t solved = 0;
};

Sweep sweep(const fs::path& config_file, const std::string& preset, const fs::path& out,
            const std::function<bool(const runner::RunSummary&)>& success)
{
    auto config = runner::load_run_config(config_file, preset);
    config.output_dir = out.string();
    Sweep s;
    const auto start = Clock::now();
    for (auto seed : config.seeds) {
        runner::DeterministicRun run{config, seed, runner::run_directory(config, seed)};
        s.runs.push_back(run.run());
        s.solved += success(s.runs.back()) ? 1 : 0;
        std::cerr << "  " << config.name << " seed " << seed << ": " << s.runs.back().env_steps << " steps, final "
                  << s.runs.back().final_mean << "\n";
    }
    s.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
    return s;
}

Outcome climb(const Context& ctx)
{
    const auto file = source_root() / "configs" / "climb.json";
    const auto solved = [](const runner::RunSummary& r) {
        return r.solved && r.final_mean >= climb_optimum - 1e-9 && r.env_steps <= 50000 + 256;
    };
    const auto full = sweep(file, "", ctx.work / "climb", solved);
    const auto ablation = sweep(file, "no_diversity", ctx.work / "climb", solved);
    return {full.solved >= seeds_needed && full.solved >= ablation.solved && full.wall_s < climb_wall_limit_s,
            "optimum reached in " + std::to_string(full.solved) + "/5 seeds (ablation " +
                std::to_string(ablation.solved) + "/5), " + fmt(full.wall_s, 3) + " s"};
}

Outcome disperse(const Context& ctx)
{
    const auto reached = [](const runner::RunSummary& r) {
        for (const auto& e : r.evals) {
            if (e.mean >= disperse_floor && e.env_steps <= 200000 + 1024) return true;
        }
        return false;
    };
    const auto full = sweep(source_root() / "configs" / "disperse.json", "", ctx.work / "disperse", reached);
    std::string finals;
    for (const auto& r : full.runs) finals += (finals.empty() ? "" : ", ") + fmt(r.final_mean);
    return {full.solved >= seeds_needed && full.wall_s < disperse_wall_limit_s,
            "mean punishment >= -1 in " + std::to_string(full.solved) + "/5 seeds (last evals " + finals + "), " +
                fmt(full.wall_s, 3) + " s"};
}

Outcome diversity(const Context& ctx)
{
    const auto file = source_root() / "configs" / "gather.json";
    const auto any = [](const runner::RunSummary&) { return true; };
    const auto full = sweep(file, "", ctx.work / "gather", any);
    const auto ablation = sweep(file, "no_diversity", ctx.work / "gather", any);
    const auto at_fraction = [&](const std::string& name) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& run : metrics::find_runs(ctx.work / "gather" / name)) {
            sum += run.divergence_at_step_fraction(divergence_fraction);
            ++n;
        }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
    };
    const auto finals = [](const Sweep& s) {
        std::vector<double> v;
        for (const auto& r : s.runs) v.push_back(r.final_mean);
        return centralizer::median(v);
    };
    const double kl_full = at_fraction("cmarl");
    const double kl_ablation = at_fraction("no_diversity");
    const double med_full = finals(full);
    const double med_ablation = finals(ablation);
    return {kl_full >= divergence_ratio * kl_ablation && kl_full > 0.0 && med_full >= med_ablation,
            "KL at 20%: " + fmt(kl_full) + " vs ablation " + fmt(kl_ablation) + " (ratio " +
                fmt(kl_ablation > 0 ? kl_full / kl_ablation : INFINITY) + "), median final return " + fmt(med_full) +
                " vs " + fmt(med_ablation)};
}

nlohmann::json read_json(const fs::path& file)
{
    std::ifstream in{file};
    return nlohmann::json::parse(in);
}

Outcome scaling(const Context& ctx)
{
    std::vector<std::pair<std::uint32_t, std::uint64_t>> steps;
    std::vector<double> returns;
    for (std::uint32_t containers : {1u, 2u, 3u}) {
        auto config = runner::load_run_config(source_root() / "configs" / "gather.json", "");
        config.name = std::to_string(containers) + "x4";
        config.containers = containers;
        config.actors_per_container = 4;
        config.step_budget = 1000000000;
        config.time_budget_s = scaling_budget_s;
        config.eval.every_s = 30.0;
        config.output_dir = (ctx.work / "scaling").string();
        const auto result = runner::run_parallel(config, 1, runner::run_directory(config, 1), ctx.exe);
        steps.emplace_back(containers, result.env_steps);
        returns.push_back(result.final_mean);
        std::cerr << "  " << config.name << ": " << result.env_steps << " steps, final " << result.final_mean << "\n";
    }
    const double ratio = static_cast<double>(steps[2].second) / static_cast<double>(std::max<std::uint64_t>(1, steps[0].second));
    const bool nondecreasing = returns[0] <= returns[1] && returns[1] <= returns[2];
    return {ratio >= scaling_steps_ratio && nondecreasing,
            "steps 1x4/2x4/3x4: " + std::to_string(steps[0].second) + "/" + std::to_string(steps[1].second) + "/" +
                std::to_string(steps[2].second) + " (3x4 over 1x4 " + fmt(ratio) + "), returns " + fmt(returns[0]) +
                "/" + fmt(returns[1]) + "/" + fmt(returns[2]) + ", " +
                std::to_string(std::thread::hardware_concurrency()) + " cores"};
}

Outcome stability(const Context&)
{
    using namespace metrics;
    double worst_flat = 0.0;
    for (Smoother s : {Smoother::ema, Smoother::dema, Smoother::midpoint, Smoother::kalman}) {
        worst_flat = std::max(worst_flat, stability_distance(std::vector<double>(20, -4.25), s));
    }
    const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6, 5, 3};
    double level = x[0], sum = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        level = 0.1 * x[t] + 0.9 * level;
        sum += (x[t] - level) * (x[t] - level);
    }
    const double d = stability_distance(x, Smoother::ema);
    const double err = std::max(std::abs(d - std::sqrt(sum)), std::abs(d - 7.1107508138389415));
    return {worst_flat <= stability_tol && err <= stability_tol,
            "flat-curve distance " + fmt(worst_flat) + ", EMA error " + fmt(err)};
}

Outcome fault(const Context& ctx)
{
    auto config = runner::load_run_config(source_root() / "configs" / "disperse.json", "");
    config.name = "fault";
    config.step_budget = 1000000000;
    config.time_budget_s = fault_run_s;
    config.eval.every_s = 5.0;
    config.eval.episodes = 5;
    config.eval.stop_at_return.reset();
    config.broadcast_interval_s = 2.0;
    config.fault.link_down_at_s = fault_at_s;
    config.fault.link_down_for_s = fault_for_s;
    config.output_dir = (ctx.work / "fault").string();
    const auto dir = runner::run_directory(config, 1);
    const auto result = runner::run_parallel(config, 1, dir, ctx.exe);

    const auto summary = read_json(dir / "summary.json");
    std::uint64_t acked = 0, lost = 0, failures = 0, resends = 0, unbalanced = 0, duplicates = 0;
    for (std::uint32_t c = 0; c < config.containers; ++c) {
        const auto accepted_list = summary.at("accepted_seqs").value(std::to_string(c), std::vector<std::uint64_t>{});
        const std::set<std::uint64_t> accepted(accepted_list.begin(), accepted_list.end());
        duplicates += summary.at("containers").at(std::to_string(c)).at("duplicates").get<std::uint64_t>();
        const auto file = dir / ("container_" + std::to_string(c) + "_summary.json");
        if (!fs::exists(file)) {
            ++unbalanced;
            continue;
        }
        const auto record = read_json(file);
        for (const auto& inc : record.at("incarnations")) {
            const auto& link = inc.at("link");
            for (auto seq : inc.at("acked_seqs").get<std::vector<std::uint64_t>>()) {
                ++acked;
                lost += accepted.count(seq) == 0 ? 1 : 0;
            }
            failures += link.at("link_failures").get<std::uint64_t>() + link.at("connect_failures").get<std::uint64_t>();
            resends += link.at("resends").get<std::uint64_t>();
            const auto created = link.at("batches_created").get<std::uint64_t>();
            const auto settled = link.at("acked").get<std::uint64_t>() + link.at("pending_at_exit").get<std::uint64_t>() +
                                 link.at("dropped_unsent").get<std::uint64_t>();
            unbalanced += created == settled ? 0 : 1;
        }
    }
    const bool completed = result.exit_status == 0 && summary.value("finished", false);
    return {completed && lost == 0 && unbalanced == 0 && failures > 0 && duplicates <= resends,
            std::to_string(acked) + " acknowledged batches, " + std::to_string(lost) + " missing at the centralizer, " +
                std::to_string(failures) + " link failures, " + std::to_string(resends) + " resends vs " +
                std::to_string(duplicates) + " duplicates, " + (unbalanced ? "counters UNBALANCED" : "counters balanced") +
                ", " + (completed ? "training completed" : "training did NOT complete")};
}

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)(const Context&);
};

const Criterion criteria[] = {
    {1, "gradient correctness", gradients},
    {2, "mixer monotonicity", monotone},
    {3, "priority formula and sampling", priorities},
    {4, "diversity identities", identities},
    {5, "queue fabric exactly-once", fabric},
    {6, "non-blocking collection", collection},
    {7, "Climb end-to-end learning", climb},
    {8, "Disperse end-to-end learning", disperse},
    {9, "diversity effect on Gather", diversity},
    {10, "scaling with actor count", scaling},
    {11, "stability metric", stability},
    {12, "fault tolerance", fault},
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    std::vector<int> selected;
    Context ctx;
    std::string work = (fs::temp_directory_path() / "cmarl_acceptance").string();
    std::string exe;
    app.add_option("--criterion", selected, "criterion numbers to run (default: all)")->check(CLI::Range(1, 12));
    app.add_option("--work", work, "directory for run outputs");
    app.add_option("--exe", exe, "cmarl executable for multi-process runs");
    CLI11_PARSE(app, argc, argv);
    set_log_level(LogLevel::error);
    ctx.work = work;
    ctx.exe = exe.empty() ? fs::path(CMARL_EXE) : fs::path(exe);
    if (selected.empty()) {
        for (const auto& c : criteria) selected.push_back(c.id);
    }

    int failures = 0;
    for (const auto& c : criteria) {
        if (std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        fs::create_directories(ctx.work);
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        std::ostringstream line;
        line << "criterion " << c.id << " [" << c.name << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
             << " (" << fmt(secs, 3) << " s)";
        std::cout << line.str() << std::endl;
        std::ofstream(ctx.work / "result.txt", std::ios::app) << line.str() << '\n';
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
