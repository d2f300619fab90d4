#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cropcal/wofost.hpp"

using namespace cropcal;
using namespace cropcal::wofost;

namespace {

CropVariety preset(std::string_view name) {
    auto v = find_preset(name);
    REQUIRE(v.has_value());
    return *v;
}

std::vector<DailyWeather> random_weather(const CropVariety& v, RngStream& rng, int days) {
    std::vector<DailyWeather> w(days);
    for (auto& d : w) {
        d.tavg = rng.uniform(v.crop_params.tbase - 5, v.crop_params.tbase + 40);
        d.rain = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0, 30);
        d.irrad = rng.uniform(0, 3e7);
    }
    return w;
}

}  // namespace

TEST_CASE("temperature effect") {
    CHECK(temperature_effect(22, 0) == 22);
    CHECK(temperature_effect(10, 10) == 0);
    CHECK(temperature_effect(8, 10) == 0);
}

TEST_CASE("soil moisture") {
    CHECK(soil_moisture(0.30, 0.30, 0.12) == 1.0);
    CHECK(soil_moisture(0.12, 0.30, 0.12) == 0.0);
    CHECK(soil_moisture(0.21, 0.30, 0.12) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(soil_moisture(0.50, 0.30, 0.12) == 1.0);
    CHECK_THROWS_AS(soil_moisture(0.2, 0.12, 0.12), ConfigError);
}

TEST_CASE("water availability is a limiting-factor minimum") {
    CHECK(water_availability(10, 5, 1.0) == 1.0);
    CHECK(water_availability(0, 5, 1.0) == 0.0);
    CHECK(water_availability(2.5, 5, 0.8) == 0.5);
    CHECK(water_availability(5, 5, 0.3) == 0.3);
}

TEST_CASE("lai step arithmetic for HD-2967") {
    const auto v = preset("HD-2967");
    // water = 1 needs daily rain at least the reference; irrad_norm = 1.
    const DailyWeather day{22.0, daily_rain_reference(v, 120), kReferenceIrradiance};
    CHECK(lai_step(0.0, v, day) == doctest::Approx(0.035 * 22).epsilon(1e-12));
    CHECK(lai_step(v.crop_params.lai_max, v, day) == 0.0);
    CHECK(lai_step(1.0, v, DailyWeather{-1.0, 10.0, kReferenceIrradiance}) == 0.0);
    CHECK(lai_step(1.0, v, DailyWeather{22.0, 0.0, kReferenceIrradiance}) == 0.0);
}

TEST_CASE("lai step never overshoots LAI_MAX") {
    auto v = preset("IR64");
    v.crop_params.rgrlai = 5.0;  // deliberately huge
    const DailyWeather day{40, 50, 3e7};
    for (double lai : {0.0, 1.0, 6.9, 7.0}) CHECK(lai + lai_step(lai, v, day) <= v.crop_params.lai_max);
}

TEST_CASE("lai step is monotone in each growth factor") {
    const auto v = preset("Sahbhagi Dhan");
    RngStream rng(21);
    for (int i = 0; i < 2000; ++i) {
        const double lai = rng.uniform(0, v.crop_params.lai_max);
        const DailyWeather base{rng.uniform(0, 40), rng.uniform(0, 15), rng.uniform(0, 3e7)};
        DailyWeather warmer = base, wetter = base, brighter = base;
        warmer.tavg += rng.uniform(0, 5);
        wetter.rain += rng.uniform(0, 5);
        brighter.irrad += rng.uniform(0, 5e6);
        const double d = lai_step(lai, v, base);
        CHECK(lai_step(lai, v, warmer) >= d);
        CHECK(lai_step(lai, v, wetter) >= d);
        CHECK(lai_step(lai, v, brighter) >= d);
    }
}

TEST_CASE("season trajectories: monotone, bounded, start at lai0") {
    RngStream rng(8);
    for (const auto& v : variety_presets()) {
        CAPTURE(v.name);
        for (int k = 0; k < 50; ++k) {
            const auto w = random_weather(v, rng, 120);
            const auto lai = simulate_season(v, w);
            REQUIRE(lai.size() == 120);
            CHECK(lai[0] == 0.01);
            for (std::size_t t = 1; t < lai.size(); ++t) {
                CHECK(lai[t] >= lai[t - 1]);
                CHECK(lai[t] <= v.crop_params.lai_max);
            }
        }
    }
}

TEST_CASE("cold season stays flat") {
    const auto v = preset("BT Cotton");
    const auto lai = simulate_season(v, constant_weather(v, 14.0, 700, 120));
    for (double x : lai) CHECK(x == 0.01);
}

TEST_CASE("dry season stays flat") {
    const auto v = preset("IR64");
    const auto lai = simulate_season(v, constant_weather(v, 28.0, 0.0, 120));
    for (double x : lai) CHECK(x == 0.01);
}

TEST_CASE("long favourable season approaches LAI_MAX from below") {
    const auto v = preset("IR64");
    SimulationSettings s;
    s.days = 2000;
    const auto lai = simulate_season(v, constant_weather(v, 30, 1200.0 * 2000 / 120, s.days), s);
    CHECK(lai.back() <= v.crop_params.lai_max);
    CHECK(lai.back() > 0.99 * v.crop_params.lai_max);
}

TEST_CASE("irradiance normalisation is scale free") {
    const auto v = preset("Lok-1");
    auto w = constant_weather(v, 20, 400, 120);
    SimulationSettings s;
    const auto a = simulate_season(v, w, s);
    auto scaled_v = v;
    scaled_v.irrad *= 3;
    for (auto& d : w) d.irrad *= 3;
    s.irrad_ref *= 3;
    const auto b = simulate_season(scaled_v, w, s);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(b[t] == doctest::Approx(a[t]).epsilon(1e-12));
}

TEST_CASE("simulate_season checks the weather length") {
    const auto v = preset("IR64");
    CHECK_THROWS_AS(simulate_season(v, constant_weather(v, 28, 1000, 119)), std::invalid_argument);
}

TEST_CASE("target trajectories") {
    const auto v = preset("HD-2967");
    RngStream a(5), b(5), z(5);
    const auto ta = target_trajectory(v, a);
    const auto tb = target_trajectory(v, b);
    CHECK(ta == tb);
    for (double x : ta) {
        CHECK(x >= 0.0);
        CHECK(x <= v.crop_params.lai_max);
    }
    const auto flat = target_trajectory(v, z, {}, 0.0);
    CHECK(flat == simulate_season(v, constant_weather(v, v.weather.tavg_mid(), v.weather.rain_mid(), 120)));
}

TEST_CASE("presets carry the variety table") {
    REQUIRE(variety_presets().size() == 5);
    const auto hd = preset("HD-2967 (Irrigated)");
    CHECK(hd.crop_params.lai_max == 6.5);
    CHECK(hd.crop_params.rgrlai == 0.035);
    CHECK(hd.crop_params.tbase == 0.0);
    CHECK(hd.soil.fc == 0.30);
    CHECK(hd.soil.wp == 0.12);
    CHECK(hd.soil.bd == 1.3);
    CHECK(hd.weather.tavg_low == 20);
    CHECK(hd.weather.tavg_high == 25);
    CHECK(hd.weather.rain_low == 400);
    CHECK(hd.weather.rain_high == 600);

    const auto ir = preset("ir64");
    CHECK(ir.crop_params.lai_max == 7.0);
    CHECK(ir.crop_params.rgrlai == 0.04);
    CHECK(ir.crop_params.tbase == 10.0);
    CHECK(ir.soil.fc == 0.34);
    CHECK(ir.soil.wp == 0.15);
    CHECK(ir.soil.bd == 1.2);

    const auto bt = preset("BT Cotton (RCH 134)");
    CHECK(bt.crop_params.lai_max == 5.5);
    CHECK(bt.crop_params.rgrlai == 0.03);
    CHECK(bt.crop_params.tbase == 15.0);
    CHECK(bt.soil.fc == 0.28);
    CHECK(bt.soil.wp == 0.12);
    CHECK(bt.soil.bd == 1.4);

    CHECK_FALSE(find_preset("Basmati").has_value());
    for (const auto& v : variety_presets()) CHECK_NOTHROW(v.validate());
}

TEST_CASE("variety validation") {
    auto v = preset("IR64");
    v.soil.wp = v.soil.fc;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = preset("IR64");
    v.crop_params.rgrlai = 0;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = preset("IR64");
    v.weather.rain_high = v.weather.rain_low;
    CHECK_THROWS_AS(v.validate(), ConfigError);
}
