#include "cmarl/runner/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "cmarl/common/error.hpp"
#include "cmarl/common/hash.hpp"
#include "cmarl/envs/registry.hpp"

namespace cmarl::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads known keys of one object and rejects the rest.
class Reader {
public:
    Reader(const json& j, std::string path) : j_{j}, path_{std::move(path)}
    {
        if (!j_.is_object()) {
            throw ConfigError(where() + "must be an object");
        }
    }

    template <typename T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where() + key + ": " + e.what());
        }
    }

    template <typename T>
    void read(const char* key, std::optional<T>& out)
    {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) {
            return;
        }
        T value{};
        read(key, value);
        out = value;
    }

    const json* child(const char* key)
    {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError(where() + "unknown key '" + key + "'");
            }
        }
    }

private:
    std::string where() const { return path_.empty() ? std::string() : path_ + ": "; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw ConfigError(message);
    }
}

}  // namespace

RunConfig parse_run_config(const json& j)
{
    RunConfig c;
    Reader r{j, ""};
    r.read("name", c.name);
    if (const json* env = r.child("env")) {
        c.env = *env;
    }
    r.read("containers", c.containers);
    r.read("actors_per_container", c.actors_per_container);
    r.read("eta_percent", c.eta_percent);
    r.read("beta", c.beta);
    r.read("lambda", c.lambda);
    r.read("temperature", c.temperature);
    r.read("gamma", c.gamma);
    r.read("no_diversity", c.no_diversity);
    if (const json* e = r.child("epsilon")) {
        Reader er{*e, r.path("epsilon")};
        er.read("start", c.epsilon.start);
        er.read("end", c.epsilon.end);
        er.read("anneal_steps", c.epsilon.anneal_steps);
        er.finish();
    }
    if (const json* o = r.child("optimizer")) {
        Reader orr{*o, r.path("optimizer")};
        orr.read("learning_rate", c.optimizer.learning_rate);
        orr.read("alpha", c.optimizer.alpha);
        orr.read("eps", c.optimizer.eps);
        orr.read("grad_clip", c.grad_clip);
        orr.finish();
    }
    r.read("target_update_interval", c.target_update_interval);
    r.read("broadcast_interval_s", c.broadcast_interval_s);
    r.read("broadcast_every_ticks", c.broadcast_every_ticks);
    r.read("buffer_capacity", c.buffer_capacity);
    r.read("central_buffer_capacity", c.central_buffer_capacity);
    r.read("batch_size", c.batch_size);
    r.read("min_buffer", c.min_buffer);
    if (const json* p = r.child("priority")) {
        Reader pr{*p, r.path("priority")};
        pr.read("eps", c.priority_eps);
        pr.read("return_low", c.return_low);
        pr.read("return_high", c.return_high);
        pr.finish();
    }
    r.read("hidden", c.hidden);
    r.read("mixer_hidden", c.mixer_hidden);
    r.read("step_budget", c.step_budget);
    r.read("time_budget_s", c.time_budget_s);
    r.read("seeds", c.seeds);
    if (const json* e = r.child("eval")) {
        Reader er{*e, r.path("eval")};
        er.read("episodes", c.eval.episodes);
        er.read("every_steps", c.eval.every_steps);
        er.read("every_s", c.eval.every_s);
        er.read("seed", c.eval.seed);
        er.read("stop_at_return", c.eval.stop_at_return);
        er.finish();
    }
    r.read("central_min_updates_per_s", c.central_min_updates_per_s);
    r.read("central_updates_per_tick", c.central_updates_per_tick);
    r.read("container_updates_per_tick", c.container_updates_per_tick);
    r.read("actor_queue_capacity", c.actor_queue_capacity);
    r.read("output_dir", c.output_dir);
    if (const json* f = r.child("fault")) {
        Reader fr{*f, r.path("fault")};
        fr.read("link_down_at_s", c.fault.link_down_at_s);
        fr.read("link_down_for_s", c.fault.link_down_for_s);
        fr.finish();
    }
    r.read("max_restarts", c.max_restarts);
    r.read("checkpoint_every_s", c.checkpoint_every_s);
    r.finish();
    validate(c);
    return c;
}

void validate(const RunConfig& c)
{
    require(!c.name.empty(), "name must not be empty");
    envs::make_env(c.env);
    require(c.containers >= 1, "containers must be at least 1");
    require(c.actors_per_container >= 1, "actors_per_container must be at least 1");
    require(c.eta_percent > 0.0 && c.eta_percent <= 100.0, "eta_percent must lie in (0, 100]");
    require(c.beta >= 0.0, "beta must be non-negative");
    require(c.lambda >= 0.0, "lambda must be non-negative");
    require(c.temperature > 0.0, "temperature must be positive");
    require(c.gamma >= 0.0 && c.gamma <= 1.0, "gamma must lie in [0, 1]");
    require(c.epsilon.start >= 0.0 && c.epsilon.start <= 1.0, "epsilon.start must lie in [0, 1]");
    require(c.epsilon.end >= 0.0 && c.epsilon.end <= 1.0, "epsilon.end must lie in [0, 1]");
    require(c.optimizer.learning_rate > 0.0, "optimizer.learning_rate must be positive");
    require(c.optimizer.alpha >= 0.0 && c.optimizer.alpha < 1.0, "optimizer.alpha must lie in [0, 1)");
    require(c.optimizer.eps > 0.0, "optimizer.eps must be positive");
    require(c.grad_clip > 0.0, "optimizer.grad_clip must be positive");
    require(c.target_update_interval >= 1, "target_update_interval must be at least 1");
    require(c.broadcast_interval_s > 0.0, "broadcast_interval_s must be positive");
    require(c.broadcast_every_ticks >= 1, "broadcast_every_ticks must be at least 1");
    require(c.buffer_capacity >= 1 && c.central_buffer_capacity >= 1, "buffer capacities must be at least 1");
    require(c.batch_size >= 1, "batch_size must be at least 1");
    require(c.min_buffer >= 1, "min_buffer must be at least 1");
    require(c.priority_eps > 0.0, "priority.eps must be positive");
    require(c.return_low.has_value() == c.return_high.has_value(),
            "priority.return_low and priority.return_high go together");
    if (c.return_low) {
        require(*c.return_high > *c.return_low, "priority.return_high must exceed priority.return_low");
    }
    require(c.hidden >= 1, "hidden must be at least 1");
    require(c.time_budget_s >= 0.0, "time_budget_s must be non-negative");
    require(!c.seeds.empty(), "seeds must not be empty");
    require(c.eval.every_steps >= 1 && c.eval.every_s > 0.0, "eval intervals must be positive");
    require(c.central_min_updates_per_s >= 0.0, "central_min_updates_per_s must be non-negative");
    require(c.container_updates_per_tick >= 1 && c.central_updates_per_tick >= 1,
            "updates per tick must be at least 1");
    require(c.actor_queue_capacity >= 1, "actor_queue_capacity must be at least 1");
    require(c.fault.link_down_for_s >= 0.0, "fault.link_down_for_s must be non-negative");
    require(c.checkpoint_every_s > 0.0, "checkpoint_every_s must be positive");
}

json to_json(const RunConfig& c)
{
    json j;
    j["name"] = c.name;
    j["env"] = c.env;
    j["containers"] = c.containers;
    j["actors_per_container"] = c.actors_per_container;
    j["eta_percent"] = c.eta_percent;
    j["beta"] = c.beta;
    j["lambda"] = c.lambda;
    j["temperature"] = c.temperature;
    j["gamma"] = c.gamma;
    j["no_diversity"] = c.no_diversity;
    j["epsilon"] = {{"start", c.epsilon.start}, {"end", c.epsilon.end}, {"anneal_steps", c.epsilon.anneal_steps}};
    j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                      {"alpha", c.optimizer.alpha},
                      {"eps", c.optimizer.eps},
                      {"grad_clip", c.grad_clip}};
    j["target_update_interval"] = c.target_update_interval;
    j["broadcast_interval_s"] = c.broadcast_interval_s;
    j["broadcast_every_ticks"] = c.broadcast_every_ticks;
    j["buffer_capacity"] = c.buffer_capacity;
    j["central_buffer_capacity"] = c.central_buffer_capacity;
    j["batch_size"] = c.batch_size;
    j["min_buffer"] = c.min_buffer;
    j["priority"] = {{"eps", c.priority_eps},
                     {"return_low", c.return_low ? json(*c.return_low) : json()},
                     {"return_high", c.return_high ? json(*c.return_high) : json()}};
    j["hidden"] = c.hidden;
    j["mixer_hidden"] = c.mixer_hidden;
    j["step_budget"] = c.step_budget;
    j["time_budget_s"] = c.time_budget_s;
    j["seeds"] = c.seeds;
    j["eval"] = {{"episodes", c.eval.episodes},
                 {"every_steps", c.eval.every_steps},
                 {"every_s", c.eval.every_s},
                 {"seed", c.eval.seed},
                 {"stop_at_return", c.eval.stop_at_return ? json(*c.eval.stop_at_return) : json()}};
    j["central_min_updates_per_s"] = c.central_min_updates_per_s;
    j["central_updates_per_tick"] = c.central_updates_per_tick;
    j["container_updates_per_tick"] = c.container_updates_per_tick;
    j["actor_queue_capacity"] = c.actor_queue_capacity;
    j["output_dir"] = c.output_dir;
    j["fault"] = {{"link_down_at_s", c.fault.link_down_at_s}, {"link_down_for_s", c.fault.link_down_for_s}};
    j["max_restarts"] = c.max_restarts;
    j["checkpoint_every_s"] = c.checkpoint_every_s;
    return j;
}

fs::path preset_dir()
{
    if (const char* dir = std::getenv("CMARL_PRESET_DIR")) {
        return dir;
    }
    return CMARL_DEFAULT_PRESET_DIR;
}

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    const auto dir = preset_dir();
    if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".json") {
                names.push_back(entry.path().stem().string());
            }
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

json apply_overlay(json base, const json& overlay)
{
    if (!base.is_object() || !overlay.is_object()) {
        return overlay;
    }
    for (const auto& [key, value] : overlay.items()) {
        if (key == "env" && value.is_object() && base.contains("env") && value.contains("name") &&
            value.at("name") != base["env"].value("name", json())) {
            base[key] = value;  // a different task starts from its own defaults
        } else if (base.contains(key) && base[key].is_object() && value.is_object()) {
            base[key] = apply_overlay(base[key], value);
        } else {
            base[key] = value;
        }
    }
    return base;
}

namespace {

json read_json_file(const fs::path& file)
{
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot read " + file.string());
    }
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
}

}  // namespace

RunConfig load_run_config(const fs::path& file, const std::string& preset)
{
    json j = file.empty() ? json::object() : read_json_file(file);
    if (!preset.empty()) {
        const auto path = preset_dir() / (preset + ".json");
        if (!fs::exists(path)) {
            std::string known;
            for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
            throw ConfigError("unknown preset '" + preset + "' (known: " + known + ")");
        }
        j = apply_overlay(j, read_json_file(path));
    }
    try {
        return parse_run_config(j);
    } catch (const ConfigError& e) {
        throw ConfigError((file.empty() ? std::string("config") : file.string()) + ": " + e.what());
    }
}

std::string config_hash(const RunConfig& config)
{
    return git_blob_hash(to_json(config).dump());
}

}  // namespace cmarl::runner
