#pragma once

#include <string>

#include "ionshuttle/baselines.hpp"
#include "ionshuttle/io.hpp"

namespace ionshuttle {

// One frame per decision epoch, frame 0 being the start state. Each frame
// lists the cell mapping, the action that led to it and the gates executed.
Json animate_frames(const ChipSpec& spec, const Problem& problem, const Schedule& schedule);

// Same frames as plain text, one block per frame, zones listed from the
// junction outward.
std::string animate_text(const ChipSpec& spec, const Problem& problem, const Schedule& schedule);

}  // namespace ionshuttle
