#pragma once

/// @file enkf.hpp
/// Scalar-state ensemble Kalman filter for assimilating LAI observations
/// into the simplified WOFOST forecast.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cropcal/core.hpp"
#include "cropcal/wofost.hpp"

namespace cropcal::enkf {

/// What happens to the 10% of observation days flagged as degraded.
enum class DegradeMode { missing, noisy };

std::string_view to_string(DegradeMode mode) noexcept;
std::optional<DegradeMode> parse_degrade_mode(std::string_view text);

struct Config {
    std::size_t members = 50;
    double process_noise = 1e-4;     ///< Q_t, variance
    double observation_noise = 0.1;  ///< R_t, variance
    double observation_operator = 1.0;  ///< H_t
    int observation_interval = 5;    ///< days; 0 disables observations
    double degraded_fraction = 0.10;
    DegradeMode degrade_mode = DegradeMode::missing;
    /// Noisy-mode degraded observations get N(0, noisy_variance_factor * R_t).
    double noisy_variance_factor = 5.0;
    /// Variance of the relative per-member parameter perturbation.
    double parameter_noise = 0.1;
    /// Standard deviation of the initial ensemble around LAI(0).
    double initial_spread = 0.005;

    void validate() const;
};

struct EnsembleState {
    std::vector<double> members;
    int day = 0;
};

double ensemble_mean(std::span<const double> members);

/// Unbiased sample variance (1 / (M - 1)).
double ensemble_covariance(std::span<const double> members, double mean);

/// K = P H (H P H + R)^-1 for a scalar state.
double kalman_gain(double P, double H, double R);

/// M draws of y + N(0, R).
std::vector<double> perturb_observation(double y, double R, std::size_t count, RngStream& rng);

/// a_i + K (y_i - H a_i) for every member.
EnsembleState update(const EnsembleState& state, std::span<const double> perturbed_obs, double K,
                     double H);

/// Observed LAI per day; empty entries are days without a usable observation.
struct ObservationSeries {
    std::vector<std::optional<double>> values;

    std::size_t observed_days() const;
};

/// Samples the target every `observation_interval` days (skipping day 0) and
/// degrades each sampled day independently with probability `degraded_fraction`.
ObservationSeries build_observations(std::span<const double> target, const Config& config,
                                     RngStream& rng);

struct AssimilationResult {
    wofost::Trajectory assimilated;  ///< ensemble mean per day
    wofost::Trajectory simulated;    ///< unperturbed free-running WOFOST
};

/// Per-member parameter draw: RGRLAI, IRRAD and the soil water limits scaled
/// by (1 + eps), eps ~ N(0, parameter_noise).
wofost::CropVariety perturb_variety(const wofost::CropVariety& variety, double eps);

/// Propagates the ensemble day by day with process noise and applies an EnKF
/// update on every day that has an observation.
AssimilationResult assimilate_season(const wofost::CropVariety& variety,
                                     std::span<const wofost::DailyWeather> weather,
                                     const ObservationSeries& observations, const Config& config,
                                     RngStream& rng, const wofost::SimulationSettings& settings = {});

}  // namespace cropcal::enkf
