#include "cmarl/replay/trace.hpp"

namespace cmarl::replay {

nlohmann::json trace_json(const Trajectory& t)
{
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t s = 0; s < t.length; ++s) {
        std::vector<int> joint;
        for (std::size_t i = 0; i < t.n_agents; ++i) {
            joint.push_back(t.action_at(s, i));
        }
        steps.push_back({{"t", s}, {"actions", joint}, {"reward", t.rewards[s]}, {"terminal", t.terminal[s] != 0}});
    }
    return {{"uid", t.uid},
            {"container", t.container_id},
            {"priority", t.priority},
            {"length", t.length},
            {"return", t.total_reward()},
            {"steps", std::move(steps)}};
}

void write_trace_line(std::ostream& out, const Trajectory& trajectory)
{
    out << trace_json(trajectory).dump() << '\n';
}

}  // namespace cmarl::replay
