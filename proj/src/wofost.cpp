#include "cropcal/wofost.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cropcal::wofost {

void CropVariety::validate() const {
    auto fail = [&](const std::string& what) {
        throw ConfigError("variety '" + name + "': " + what);
    };
    if (!(soil.wp < soil.fc)) fail("wilting point must be below field capacity");
    if (!(crop_params.rgrlai > 0.0)) fail("RGRLAI must be positive");
    if (!(crop_params.lai_max > 0.0)) fail("LAI_MAX must be positive");
    if (!(weather.tavg_low < weather.tavg_high)) fail("TAVG range is degenerate");
    if (!(weather.rain_low < weather.rain_high)) fail("RAIN range is degenerate");
    if (!(weather.rain_low >= 0.0)) fail("RAIN range must be non-negative");
    if (!(irrad >= 0.0)) fail("IRRAD must be non-negative");
}

Bounds CropVariety::search_bounds() const {
    return Bounds({weather.tavg_low, weather.rain_low}, {weather.tavg_high, weather.rain_high});
}

double temperature_effect(double tavg, double tbase) noexcept {
    return std::max(0.0, tavg - tbase);
}

double soil_moisture(double smtab_max, double fc, double wp) {
    if (!(fc > wp)) throw ConfigError("soil_moisture: field capacity must exceed wilting point");
    return std::clamp((smtab_max - wp) / (fc - wp), 0.0, 1.0);
}

double water_availability(double rain, double rain_ref, double moisture) {
    if (!(rain_ref > 0.0)) throw std::invalid_argument("water_availability: rain_ref must be positive");
    return std::min(std::clamp(rain / rain_ref, 0.0, 1.0), moisture);
}

double daily_rain_reference(const CropVariety& variety, int days) {
    return variety.weather.rain_mid() / static_cast<double>(days);
}

double lai_step(double current_lai, const CropVariety& variety, const DailyWeather& weather,
                const SimulationSettings& settings) {
    const auto& crop = variety.crop_params;
    const double moisture = soil_moisture(variety.smtab_max(), variety.soil.fc, variety.soil.wp);
    const double water =
        water_availability(weather.rain, daily_rain_reference(variety, settings.days), moisture);
    const double irrad_norm = weather.irrad / settings.irrad_ref;
    const double delta = crop.rgrlai * temperature_effect(weather.tavg, crop.tbase) * water *
                         irrad_norm * (1.0 - current_lai / crop.lai_max);
    return std::clamp(delta, 0.0, std::max(0.0, crop.lai_max - current_lai));
}

Trajectory simulate_season(const CropVariety& variety, std::span<const DailyWeather> weather,
                           const SimulationSettings& settings) {
    if (settings.days < 1) throw ConfigError("simulate_season: day count must be positive");
    if (weather.size() != static_cast<std::size_t>(settings.days))
        throw std::invalid_argument("simulate_season: expected " + std::to_string(settings.days) +
                                    " weather days, got " + std::to_string(weather.size()));
    Trajectory lai(weather.size());
    lai[0] = std::min(settings.lai0, variety.crop_params.lai_max);
    for (std::size_t t = 0; t + 1 < lai.size(); ++t)
        lai[t + 1] = lai[t] + lai_step(lai[t], variety, weather[t], settings);
    return lai;
}

std::vector<DailyWeather> constant_weather(const CropVariety& variety, double tavg,
                                           double rain_total, int days) {
    const DailyWeather day{tavg, rain_total / static_cast<double>(days), variety.irrad};
    return std::vector<DailyWeather>(static_cast<std::size_t>(days), day);
}

std::vector<DailyWeather> jittered_weather(const CropVariety& variety, double tavg,
                                           double rain_total, int days, double jitter,
                                           RngStream& rng) {
    auto weather = constant_weather(variety, tavg, rain_total, days);
    if (jitter <= 0.0) return weather;
    const double rain_daily = rain_total / static_cast<double>(days);
    for (auto& day : weather) {
        day.tavg = rng.normal(tavg, jitter * std::abs(tavg));
        day.rain = std::max(0.0, rng.normal(rain_daily, jitter * rain_daily));
    }
    return weather;
}

Trajectory target_trajectory(const CropVariety& variety, RngStream& rng,
                             const SimulationSettings& settings, double jitter) {
    const auto weather = jittered_weather(variety, variety.weather.tavg_mid(),
                                          variety.weather.rain_mid(), settings.days, jitter, rng);
    return simulate_season(variety, weather, settings);
}

std::vector<CropVariety> variety_presets() {
    auto make = [](std::string name, std::string crop, double lai_max, double rgrlai,
                   double tbase, double fc, double wp, double bd, double t_lo, double t_hi,
                   double r_lo, double r_hi) {
        CropVariety v;
        v.name = std::move(name);
        v.crop = std::move(crop);
        v.crop_params = {tbase, rgrlai, lai_max, std::nullopt};
        v.soil = {fc, wp, bd};
        v.weather = {t_lo, t_hi, r_lo, r_hi};
        return v;
    };
    return {
        make("HD-2967 (Irrigated)", "wheat", 6.5, 0.035, 0.0, 0.30, 0.12, 1.3, 20, 25, 400, 600),
        make("Lok-1 (Rainfed)", "wheat", 5.5, 0.028, 10.0, 0.28, 0.11, 1.4, 18, 22, 300, 500),
        make("IR64 (Lowland)", "rice", 7.0, 0.04, 10.0, 0.34, 0.15, 1.2, 25, 30, 800, 1200),
        make("Sahbhagi Dhan (Upland)", "rice", 6.0, 0.035, 10.0, 0.29, 0.13, 1.3, 24, 28, 500, 900),
        make("BT Cotton (RCH 134)", "cotton", 5.5, 0.03, 15.0, 0.28, 0.12, 1.4, 25, 35, 500, 900),
    };
}

std::optional<CropVariety> find_preset(std::string_view name) {
    auto lower = [](std::string_view s) {
        std::string out(s);
        for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    const std::string key = lower(name);
    for (auto& v : variety_presets()) {
        const std::string full = lower(v.name);
        const std::string head = full.substr(0, full.find(" ("));
        if (key == full || key == head) return v;
    }
    return std::nullopt;
}

}  // namespace cropcal::wofost
