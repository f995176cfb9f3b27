#include "cmarl/runner/setup.hpp"

#include <fstream>

#include "cmarl/common/error.hpp"

namespace cmarl::runner {

namespace fs = std::filesystem;

valuefn::LearnerConfig learner_config(const RunConfig& c)
{
    valuefn::LearnerConfig l;
    l.loss.gamma = c.gamma;
    l.loss.diversity = true;
    l.loss.beta = c.no_diversity ? 0.0 : c.beta;
    l.loss.lambda = c.lambda;
    l.loss.temperature = c.temperature;
    l.optimizer = c.optimizer;
    l.grad_clip = c.grad_clip;
    l.target_interval = c.target_update_interval;
    return l;
}

container::ContainerConfig container_config(const RunConfig& c, std::uint64_t seed, std::uint32_t id)
{
    container::ContainerConfig cc;
    cc.container_id = id;
    cc.n_containers = c.containers;
    cc.k_actors = c.actors_per_container;
    cc.seed = seed;
    cc.env = c.env;
    cc.hidden = c.hidden;
    cc.mixer_hidden = c.mixer_hidden;
    cc.learner = learner_config(c);
    cc.follow_central = c.no_diversity;
    cc.epsilon = c.epsilon;
    cc.eta_percent = c.eta_percent;
    cc.priority_eps = c.priority_eps;
    if (c.return_low && c.return_high) {
        cc.bounds = envs::ReturnBounds{*c.return_low, *c.return_high};
    }
    cc.buffer_capacity = c.buffer_capacity;
    cc.batch_size = c.batch_size;
    cc.min_buffer = c.min_buffer;
    cc.actor_queue_capacity = c.actor_queue_capacity;
    return cc;
}

centralizer::CentralConfig central_config(const RunConfig& c, std::uint64_t seed)
{
    centralizer::CentralConfig cc;
    cc.n_containers = c.containers;
    cc.seed = seed;
    cc.env = c.env;
    cc.hidden = c.hidden;
    cc.mixer_hidden = c.mixer_hidden;
    cc.learner = learner_config(c);
    cc.buffer_capacity = c.central_buffer_capacity;
    cc.batch_size = c.batch_size;
    cc.min_buffer = c.min_buffer;
    cc.temperature = c.temperature;
    return cc;
}

fs::path run_directory(const RunConfig& c, std::uint64_t seed)
{
    return fs::path(c.output_dir) / c.name / ("seed_" + std::to_string(seed));
}

void prepare_run_directory(const fs::path& dir, const RunConfig& config, std::uint64_t seed)
{
    fs::create_directories(dir);
    RunConfig single = config;
    single.seeds = {seed};
    std::ofstream(dir / "config.json") << to_json(single).dump(2) << '\n';
    std::ofstream(dir / "config.hash") << config_hash(single) << '\n';
}

RunConfig read_run_config(const fs::path& dir)
{
    return load_run_config(dir / "config.json");
}

}  // namespace cmarl::runner
