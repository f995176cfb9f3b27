#pragma once

#include <ostream>

#include <json.hpp>

#include "cmarl/replay/trajectory.hpp"

namespace cmarl::replay {

// Debug dump of one episode as a JSON object (one line when written with dump()).
nlohmann::json trace_json(const Trajectory& trajectory);
void write_trace_line(std::ostream& out, const Trajectory& trajectory);

}  // namespace cmarl::replay
