#pragma once

#include <string>

namespace dtsn {

// One semantic push stored in the shared prompt database. `units` is the
// accounted payload size in data-units (post-compression), independent of
// the payload's character length.
struct PromptRecord {
    std::string entity;
    long long tick = 0;
    std::string payload;
    double units = 0.0;
};

} // namespace dtsn
