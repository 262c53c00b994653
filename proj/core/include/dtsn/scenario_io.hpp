#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtsn/cost_model.hpp"
#include "dtsn/fl_baseline.hpp"
#include "dtsn/protocol.hpp"

namespace dtsn::io {

// Optional synthetic federated task attached to a scenario; when present
// and fl_rounds is given as "measured", the round count comes from actually
// running the task instead of from a configured number.
struct FlTask {
    fl::SyntheticSpec spec;
    double eta = 0.05;
    double tolerance = 1e-6;
    int max_rounds = 200;
};

// Scenario-defined sweep for the custom preset: one scenario parameter and
// the grid of values to evaluate it at.
struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
};

struct ScenarioDoc {
    cost::Scenario scenario;
    std::vector<sim::PhysicalEntity> entities;
    sim::SimParams params;
    std::uint64_t seed = 1;
    long long ticks = 1;
    bool fl_rounds_measured = false;
    std::optional<FlTask> fl_task;
    std::optional<SweepSpec> sweep;
};

// Parses a JSON scenario document. Scalar entity_subchannels broadcast to
// every entity. Throws ParseError (with a line number) on malformed JSON
// and ValidationError on a document that parses but breaks the cost-model
// preconditions.
ScenarioDoc parse_scenario_text(const std::string& text);

// parse_scenario_text over the file contents; the filename is prefixed to
// error messages.
ScenarioDoc load_scenario(const std::string& path);

// The document seed, unless the DTSNSIM_SEED environment variable is set;
// a set-but-unparseable variable is a ValidationError.
std::uint64_t effective_seed(const ScenarioDoc& doc);

// Runs the attached federated task and overwrites scenario.fl_rounds with
// the executed round count. Requires fl_task.
fl::FederatedRun resolve_fl_rounds(ScenarioDoc& doc);

} // namespace dtsn::io
