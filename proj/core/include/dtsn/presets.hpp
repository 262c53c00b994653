#pragma once

#include <string>
#include <vector>

#include "dtsn/scenario_io.hpp"

namespace dtsn::presets {

// Each preset renders to named byte buffers first so tests can compare
// outputs without touching the filesystem; write_outputs persists them.
struct OutputFile {
    std::string path; // relative to the output directory
    std::string bytes;
};

const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);

// Runs one named sweep or replay over the scenario document:
//   fig5       entity compute vs. accumulated data (twin fine-tune flat)
//   fig6       server compute vs. model size x entity count (merge flat)
//   fig7       cumulative communication seconds vs. tick
//   fig8       cumulative transmitted content units vs. tick
//   fig9       paradigm totals vs. construction round count
//   casestudy  full event-level replay of both paradigms
//   custom     the scenario's own sweep block over the paradigm totals
// Sweep CSVs use "sweep_value,fl_seconds,llm_twin_seconds,ratio" (fig6 and
// fig8 vary the middle columns as documented in their headers); ratio is
// always the federated value over the semantic one. Every data CSV is
// accompanied by an SVG chart rendered from the same table.
std::vector<OutputFile> run_preset(const std::string& name, const io::ScenarioDoc& doc);

// Creates out_dir if needed and writes every file byte-exactly.
void write_outputs(const std::vector<OutputFile>& files, const std::string& out_dir);

} // namespace dtsn::presets
