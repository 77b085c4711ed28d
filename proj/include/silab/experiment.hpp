#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "silab/config.hpp"
#include "silab/objectives.hpp"

namespace silab::experiment {

/// Registers the built-in net objectives ("si-net:desk", "si-net:tiny") and
/// resolves any registry id. Safe to call repeatedly.
void ensure_registry();
std::shared_ptr<const objectives::Objective> resolve_objective(const std::string& id);

struct PointResult {
    std::string label;
    bool truncated = false;
    std::size_t jumps = 0;    // at the first configured delta
    std::size_t periods = 0;  // complete periods
    std::filesystem::path dir;
};

struct ExperimentResult {
    std::filesystem::path output;
    std::vector<PointResult> points;
};

/// Runs every sweep point (worker pool, one isolated output directory per
/// point: trace.csv, jumps.json, periods.json, manifest.json, checkpoints).
/// Re-running with the same config and seed reproduces identical bytes.
ExperimentResult run_experiment(const config::ExperimentConfig& cfg, std::ostream& log);

/// Renders a chart for a trace/overlay/similarity file. Returns the list of
/// files written. Unknown kinds throw ConfigError.
std::vector<std::filesystem::path> plot_file(const std::filesystem::path& input,
                                             const std::string& kind,
                                             const std::filesystem::path& output,
                                             double delta, std::size_t period_index);

/// Summarizes the manifests below a directory; flags hash mismatches.
std::string report_dir(const std::filesystem::path& dir);

/// Applies the SILAB_OUT_ROOT override to a configured output path.
std::filesystem::path apply_output_root(const std::filesystem::path& configured);

} // namespace silab::experiment
