#pragma once

#include <filesystem>
#include <string>

#include "macs/baseline.hpp"
#include "macs/model.hpp"
#include "macs/sim.hpp"

namespace macs {

/// Parse a scenario document. Throws ParseError on malformed input and
/// propagates ValidationError and friends for structurally broken scenarios.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Inverse of parse_scenario; round-trips bit-exactly.
std::string scenario_to_json(const Scenario& s);

std::string synthesis_to_json(const SynthesisResult& synth);

struct RunArtifacts {
    std::string trace_csv_path;
    std::string manifest_path;
    std::string report_path;
};

/// One row per step; the column manifest is written alongside so plotting
/// tools need no hardcoded schema. Control columns of the final row are
/// zero-filled (no control is applied at the horizon).
void write_trace_csv(const SimulationTrace& trace, const std::filesystem::path& csv_path,
                     const std::filesystem::path& manifest_path);

std::string run_report_to_json(const SimulationTrace& trace, const SynthesisResult& synth,
                               const CostReport& costs, const ConvergenceMetrics& metrics,
                               const RunArtifacts& artifacts);

std::string comparison_to_json(const ComparisonReport& rep);

/// Write-to-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace macs
