#pragma once

/// @file harness.hpp
/// Experiment orchestration: configuration, calibration runs, comparison
/// matrices, the EnKF worked-example check and result persistence.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cropcal/baselines.hpp"
#include "cropcal/demmogc.hpp"
#include "cropcal/enkf.hpp"
#include "cropcal/metrics.hpp"
#include "cropcal/wofost.hpp"

namespace cropcal::harness {

enum class Algorithm { demmogc, de, ga, pso, hho };
enum class Mode { assimilation, wofost_only };

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(Mode m) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view text);
std::optional<Mode> parse_mode(std::string_view text);
std::vector<Algorithm> all_algorithms();

/// Where the ground-truth LAI comes from. Unset TAVG/RAIN use the variety's
/// range midpoints.
struct TargetSpec {
    std::optional<double> tavg;
    std::optional<double> rain;
    double jitter = 0.05;
};

struct ExperimentConfig {
    /// Preset name; ignored when `inline_variety` is set.
    std::string variety = "IR64 (Lowland)";
    std::optional<wofost::CropVariety> inline_variety;
    Algorithm algorithm = Algorithm::demmogc;
    Mode mode = Mode::assimilation;
    demmogc::Config demmogc;
    baselines::DeConfig de;
    baselines::GaConfig ga;
    baselines::PsoConfig pso;
    baselines::HhoConfig hho;
    enkf::Config enkf;
    wofost::SimulationSettings simulation;
    TargetSpec target;
    /// Optional replacement for the variety's TAVG x RAIN search box.
    std::optional<std::vector<double>> bounds_lower;
    std::optional<std::vector<double>> bounds_upper;
    int runs = 1;
    std::uint64_t seed = 20250101;
    std::string output_dir = "results";

    wofost::CropVariety resolve_variety() const;
    Bounds search_bounds() const;
    /// Throws ConfigError on unknown variety or invalid parameters.
    void validate() const;
};

/// Stream id for the optimizer of one (algorithm, variety, run) cell.
std::uint64_t optimizer_stream_id(Algorithm a, std::string_view variety, int run);
/// Stream id for the data (target, observations, ensemble) of one (variety, run).
std::uint64_t data_stream_id(std::string_view variety, int run);

struct ExperimentResult {
    Algorithm algorithm = Algorithm::demmogc;
    Mode mode = Mode::assimilation;
    std::string variety;
    int run = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    metrics::MetricReport assimilation;
    metrics::MetricReport wofost;
    Genome best_genome;
    double best_fitness = 0.0;
    std::vector<double> history;
    std::size_t evaluations = 0;
    wofost::Trajectory target;
    wofost::Trajectory simulated;
    wofost::Trajectory assimilated;
    std::vector<std::optional<double>> observed;
    /// Not persisted: wall time differs between otherwise identical runs.
    double wall_seconds = 0.0;
};

/// Equality of everything persisted (NaN correlations compare equal).
bool same_outcome(const ExperimentResult& a, const ExperimentResult& b);

/// Dispatches to the configured optimizer over the shared call shape.
OptimizationResult run_optimizer(Algorithm algorithm, const ExperimentConfig& config,
                                 const Objective& objective, const Bounds& bounds, RngStream& rng,
                                 const GenerationObserver& observer = {});

/// One calibration run of the configured algorithm on the configured variety.
ExperimentResult calibrate(const ExperimentConfig& config, int run = 0);

struct ComparisonRow {
    std::string variety;
    Algorithm algorithm = Algorithm::demmogc;
    std::size_t runs = 0;
    metrics::MetricReport assimilation;  ///< mean over runs
    metrics::MetricReport wofost;        ///< mean over runs
    metrics::RunSummary rmse;            ///< assimilation RMSE over runs
    metrics::RunSummary mse;             ///< assimilation MSE over runs
};

struct WilcoxonRow {
    std::string variety;
    Algorithm baseline = Algorithm::de;
    metrics::TestResult rank_sum;
    metrics::TestResult signed_rank;
};

struct ComparisonResult {
    std::vector<ExperimentResult> cells;
    std::vector<ComparisonRow> rows;
    std::vector<WilcoxonRow> wilcoxon;
};

struct ComparisonPlan {
    std::vector<Algorithm> algorithms;
    std::vector<std::string> varieties;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned jobs = 0;
};

/// Runs calibrate for every (algorithm, variety, run) cell of the plan.
ComparisonResult compare(const ExperimentConfig& base, const ComparisonPlan& plan);

/// Summaries and DE-MMOGC-vs-baseline tests from already computed cells.
void summarize(ComparisonResult& result);

// ---------------------------------------------------------------------------
// Worked-example check
// ---------------------------------------------------------------------------

struct AppendixFixture {
    std::vector<double> forecast{0.6, 0.65, 0.7, 0.75, 0.8};
    std::vector<double> perturbed_obs{0.72, 0.67, 0.68, 0.65, 0.70};
    double observation = 0.68;
    double R = 0.01;
    double H = 1.0;
    /// Replaces the computed gain in the update step.
    std::optional<double> gain_override;

    double expected_mean = 0.7;
    double expected_covariance = 0.00625;
    double expected_gain = 0.3846;
    std::vector<double> expected_updated{0.6462, 0.6577, 0.6923, 0.7115, 0.7615};
    double expected_updated_mean = 0.6938;
};

struct AppendixTolerances {
    double mean = 1e-12;
    double covariance = 1e-6;
    double gain = 1e-4;
    double updated = 1e-3;
    double updated_mean = 1e-4;

    static AppendixTolerances uniform(double tol) { return {tol, tol, tol, tol, tol}; }
};

struct CheckEntry {
    std::string name;
    std::string expected;
    std::string actual;
    double tolerance = 0.0;
    bool passed = false;
};

struct AppendixReport {
    std::vector<CheckEntry> entries;
    bool all_passed() const;
    const CheckEntry* find(std::string_view name) const;
};

AppendixReport appendix_check(const AppendixFixture& fixture = {},
                              const AppendixTolerances& tolerances = {});

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Reads a JSON configuration file; missing keys keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const wofost::CropVariety& variety);
wofost::CropVariety variety_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ComparisonResult& result, bool include_cells = true);
ComparisonResult comparison_from_json(const nlohmann::json& j);

/// CSV renderings (header row first, RFC-4180 quoting, '.' decimal point).
std::string metrics_csv(std::span<const ExperimentResult> results);
std::string convergence_csv(const ExperimentResult& result);
std::string trajectory_csv(const ExperimentResult& result);
std::string comparison_csv(const ComparisonResult& result);
std::string wilcoxon_csv(const ComparisonResult& result);

/// File stem "<algorithm>_<variety-slug>_run<k>".
std::string result_stem(const ExperimentResult& result);

/// Writes metrics (CSV + JSON), convergence CSV and trajectory CSV for one
/// result plus a manifest.json carrying the resolved configuration.
/// Returns the written paths.
std::vector<std::filesystem::path> export_result(const ExperimentResult& result,
                                                 const ExperimentConfig& config,
                                                 const std::filesystem::path& dir);

/// Writes every cell plus comparison tables (CSV and JSON) and the manifest.
std::vector<std::filesystem::path> export_comparison(const ComparisonResult& result,
                                                     const ExperimentConfig& config,
                                                     const std::filesystem::path& dir);

/// Writes `text` to `path`; throws std::runtime_error when the file cannot be opened.
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cropcal::harness
