#pragma once

#include "metabias/effects.hpp"
#include "metabias/meta_core.hpp"
#include "metabias/metrics.hpp"
#include "metabias/sim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace metabias::harness {

// ---------------------------------------------------------------------------
// Run configuration (JSON)
// ---------------------------------------------------------------------------

struct RunConfig {
    std::vector<int> m{10, 30};
    std::vector<double> n{15.0, 30.0};  // Poisson mean arm size
    std::vector<double> tau2{0.0, 1.0, 5.0};
    std::vector<sim::VarianceScenario> variance_scenario{sim::VarianceScenario::equal,
                                                         sim::VarianceScenario::unequal};
    std::vector<EffectKind> effect_kind{EffectKind::cohen_d, EffectKind::hedges_g};
    double eta = 5.0;
    double alpha = 0.05;
    int replicates = 1000;
    std::uint64_t seed = 1;
    std::optional<double> pi_pub;  // calibrated per cell when absent
    double target_rate = 0.8;
    int calib_reps = 2000;
    std::vector<Method> methods{std::begin(kSimulationMethods), std::end(kSimulationMethods)};
    std::string output;
    int threads = 0;
};

/// Parses the JSON text of a run configuration. Unknown keys and type errors
/// raise ConfigError naming the offending field path.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

struct ScenarioCell {
    int m = 10;
    double n = 15.0;
    double tau2 = 0.0;
    sim::VarianceScenario variance_scenario = sim::VarianceScenario::equal;
    EffectKind effect_kind = EffectKind::cohen_d;
};

/// Cartesian product in the order m, n, tau2, variance_scenario, effect_kind
/// (last varies fastest).
std::vector<ScenarioCell> expand_grid(const RunConfig& cfg);

sim::SimConfig cell_config(const RunConfig& cfg, const ScenarioCell& cell, std::size_t cell_index);

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// Explicit value wins; 0 falls back to METABIAS_THREADS, then to the
/// hardware concurrency.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) on `threads` workers. Exceptions are rethrown
/// on the caller after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// CSV formatting
// ---------------------------------------------------------------------------

/// Six significant digits, '.' separator, independent of the C locale.
std::string format_number(double v);
/// Shortest representation that round-trips exactly.
std::string format_exact(double v);

// ---------------------------------------------------------------------------
// Workflows
// ---------------------------------------------------------------------------

struct CalibrationRow {
    ScenarioCell cell;
    std::optional<double> pi_pub;  // empty when the target is unreachable
    double p_significant = 0.0;
    double mean_published = 0.0;
};

CalibrationRow calibrate_cell(const RunConfig& cfg, const ScenarioCell& cell, std::size_t cell_index, int threads);
std::vector<CalibrationRow> run_calibration(const RunConfig& cfg, int threads);
std::string calibration_csv(const std::vector<CalibrationRow>& rows);

struct SimulationRow {
    ScenarioCell cell;
    ScenarioMetrics metrics;
    bool all_failed = false;
};

/// Simulates every cell with cfg.replicates replicates. Rows are ordered by
/// cell then by the order of cfg.methods.
std::vector<SimulationRow> run_simulation(const RunConfig& cfg, int threads);
std::string simulation_csv(const std::vector<SimulationRow>& rows);

// Dataset analysis --------------------------------------------------------

struct StudyRecord {
    std::string study_id;
    EffectEstimate effect;
};

struct Dataset {
    bool raw_arms = false;
    std::vector<std::string> study_ids;
    std::vector<StudySummary> summaries;   // raw-arm input only
    std::vector<StudyRecord> precomputed;  // precomputed-effect input only
};

/// Reads `study_id,n1,mean1,sd1,n0,mean0,sd0` or
/// `study_id,effect,variance,n1,n0,kind`. Throws ParseError with the line.
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);

/// Effects grouped by kind: raw input yields both d and g, precomputed input
/// keeps the kinds present in file order.
std::vector<std::pair<EffectKind, std::vector<StudyRecord>>> dataset_effects(const Dataset& ds);

struct AnalysisRow {
    Method method = Method::dl_random;
    EffectKind kind = EffectKind::cohen_d;
    std::optional<MetaResult> result;
    std::string error;
};

std::vector<AnalysisRow> analyze(const Dataset& ds, const std::vector<Method>& methods, double alpha = 0.05);
std::string analysis_csv(const std::vector<AnalysisRow>& rows);
/// Precomputed-effect CSV for every kind in the dataset.
std::string effects_csv(const Dataset& ds);

}  // namespace metabias::harness
