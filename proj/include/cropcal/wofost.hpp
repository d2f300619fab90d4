#pragma once

/// @file wofost.hpp
/// Simplified WOFOST leaf-area model: daily LAI growth driven by a
/// temperature effect, a water-availability factor and normalized radiation,
/// limited logistically by LAI_MAX. No phenology, partitioning or senescence.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cropcal/core.hpp"

namespace cropcal::wofost {

/// Typical mid-season global radiation used to normalize IRRAD.
inline constexpr double kReferenceIrradiance = 1.5e7;  // J/m^2/day

struct SoilParams {
    double fc = 0.30;  ///< field capacity
    double wp = 0.12;  ///< wilting point
    double bd = 1.3;   ///< bulk density (carried, not used by the growth law)
};

struct CropParams {
    double tbase = 0.0;     ///< base temperature, deg C
    double rgrlai = 0.035;  ///< max relative LAI growth rate, ha/ha/d
    double lai_max = 6.5;
    /// Initial maximum rooting moisture; defaults to FC (no moisture limit).
    std::optional<double> smtab_max;
};

struct WeatherRange {
    double tavg_low = 20.0;
    double tavg_high = 25.0;
    double rain_low = 400.0;   ///< season total, mm
    double rain_high = 600.0;  ///< season total, mm

    double tavg_mid() const noexcept { return 0.5 * (tavg_low + tavg_high); }
    double rain_mid() const noexcept { return 0.5 * (rain_low + rain_high); }
};

struct CropVariety {
    std::string name;
    std::string crop;
    SoilParams soil;
    CropParams crop_params;
    WeatherRange weather;
    double irrad = kReferenceIrradiance;  ///< J/m^2/day

    double smtab_max() const noexcept { return crop_params.smtab_max.value_or(soil.fc); }
    /// Throws ConfigError when an invariant is broken.
    void validate() const;
    /// Decision-variable box: TAVG x RAIN (season total).
    Bounds search_bounds() const;
};

struct DailyWeather {
    double tavg = 0.0;   ///< deg C
    double rain = 0.0;   ///< mm/day
    double irrad = kReferenceIrradiance;
};

struct SimulationSettings {
    int days = 120;
    double lai0 = 0.01;
    double irrad_ref = kReferenceIrradiance;
};

using Trajectory = std::vector<double>;

double temperature_effect(double tavg, double tbase) noexcept;

/// (SMTAB_MAX - WP) / (FC - WP), clamped to [0, 1].
double soil_moisture(double smtab_max, double fc, double wp);

/// min(clamp(rain / rain_ref, 0, 1), moisture).
double water_availability(double rain, double rain_ref, double moisture);

/// Daily rain giving full water availability: RAIN-range midpoint over the season.
double daily_rain_reference(const CropVariety& variety, int days);

/// LAI increment for one day. Non-negative; current + delta never exceeds LAI_MAX.
double lai_step(double current_lai, const CropVariety& variety, const DailyWeather& weather,
                const SimulationSettings& settings = {});

/// lai[0] = lai0; lai[t + 1] = lai[t] + lai_step(lai[t], weather[t]).
/// `weather` must hold settings.days entries (the last one is not consumed).
Trajectory simulate_season(const CropVariety& variety, std::span<const DailyWeather> weather,
                           const SimulationSettings& settings = {});

/// Season-constant weather for a candidate (TAVG, season RAIN total).
std::vector<DailyWeather> constant_weather(const CropVariety& variety, double tavg,
                                           double rain_total, int days);

/// Daily weather around (TAVG, season RAIN) with Gaussian day-to-day jitter of
/// standard deviation `jitter` times each daily mean. Rain is kept >= 0.
std::vector<DailyWeather> jittered_weather(const CropVariety& variety, double tavg,
                                           double rain_total, int days, double jitter,
                                           RngStream& rng);

/// Ground-truth LAI: season simulated under midpoint weather with jitter.
Trajectory target_trajectory(const CropVariety& variety, RngStream& rng,
                             const SimulationSettings& settings = {}, double jitter = 0.05);

/// Embedded crop-variety table (wheat, rice, cotton).
std::vector<CropVariety> variety_presets();

/// Case-insensitive lookup by full name ("IR64 (Lowland)") or leading token ("IR64").
std::optional<CropVariety> find_preset(std::string_view name);

}  // namespace cropcal::wofost
