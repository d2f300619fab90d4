#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cropcal/enkf.hpp"

using namespace cropcal;
using namespace cropcal::enkf;

namespace {

const std::vector<double> kForecast{0.6, 0.65, 0.7, 0.75, 0.8};
const std::vector<double> kPerturbed{0.72, 0.67, 0.68, 0.65, 0.70};

wofost::CropVariety ir64() { return *wofost::find_preset("IR64"); }

}  // namespace

TEST_CASE("ensemble mean") {
    CHECK(ensemble_mean(kForecast) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(ensemble_mean(std::vector<double>(7, 0.3)) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(ensemble_mean(std::vector<double>{1, 2, 3, 4}) == 2.5);
    CHECK_THROWS(ensemble_mean(std::vector<double>{}));
}

TEST_CASE("ensemble covariance") {
    CHECK(ensemble_covariance(kForecast, 0.7) == doctest::Approx(0.00625).epsilon(1e-12));
    CHECK(ensemble_covariance(std::vector<double>(4, 1.5), 1.5) == 0.0);
    CHECK(ensemble_covariance(std::vector<double>{0, 2}, 1.0) == 2.0);
    CHECK_THROWS(ensemble_covariance(std::vector<double>{1.0}, 1.0));
}

TEST_CASE("covariance is non-negative and zero only for identical members") {
    RngStream rng(4);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> m(2 + rng.index(20));
        for (auto& x : m) x = rng.uniform(0, 7);
        const double P = ensemble_covariance(m, ensemble_mean(m));
        CHECK(P > 0.0);
    }
}

TEST_CASE("kalman gain") {
    CHECK(kalman_gain(0.00625, 1, 0.01) == doctest::Approx(0.00625 / 0.01625).epsilon(1e-14));
    CHECK(std::abs(kalman_gain(0.00625, 1, 0.01) - 0.3846) < 1e-4);
    CHECK(kalman_gain(0.0, 1, 0.1) == 0.0);
    CHECK(kalman_gain(0.5, 1, 1e-14) == doctest::Approx(1.0));
    CHECK_THROWS_AS(kalman_gain(0.0, 1, 0.0), std::domain_error);
}

TEST_CASE("kalman gain is increasing in P and decreasing in R") {
    RngStream rng(12);
    for (int i = 0; i < 1000; ++i) {
        const double P = rng.uniform(0, 1), R = rng.uniform(0.001, 1), dP = rng.uniform(0.001, 1);
        CHECK(kalman_gain(P + dP, 1, R) > kalman_gain(P, 1, R));
        CHECK(kalman_gain(P + 0.01, 1, R + dP) < kalman_gain(P + 0.01, 1, R));
    }
}

TEST_CASE("perturbed observations") {
    RngStream rng(3);
    for (double v : perturb_observation(0.68, 0.0, 10, rng)) CHECK(v == 0.68);
    const std::size_t n = 100000;
    const auto draws = perturb_observation(0.68, 0.01, n, rng);
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    CHECK(std::abs(mean - 0.68) < 3 * std::sqrt(0.01) / std::sqrt(double(n)));
}

TEST_CASE("update on the worked example") {
    const double K = kalman_gain(0.00625, 1, 0.01);
    const auto out = update({kForecast, 1}, kPerturbed, K, 1.0);
    const std::vector<double> expected{0.6462, 0.6577, 0.6923, 0.7115, 0.7615};
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(out.members[i] - expected[i]) < 1e-3);
    const double mean = ensemble_mean(out.members);
    CHECK(std::abs(mean - 0.6938) < 1e-4);
    // Convex combination of the forecast mean and the mean perturbed observation.
    CHECK(mean <= 0.7);
    CHECK(mean >= ensemble_mean(kPerturbed));
}

TEST_CASE("update limits") {
    CHECK(update({kForecast, 0}, kPerturbed, 0.0, 1.0).members == kForecast);
    CHECK(update({kForecast, 0}, kPerturbed, 1.0, 1.0).members == kPerturbed);
    CHECK_THROWS_AS(update({kForecast, 0}, std::vector<double>{0.1}, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("observation series cadence and degradation") {
    const std::vector<double> target(120, 1.0);
    Config c;
    c.degraded_fraction = 0.0;
    RngStream rng(1);
    auto obs = build_observations(target, c, rng);
    CHECK(obs.observed_days() == 23);  // days 5, 10, ..., 115
    CHECK_FALSE(obs.values[0].has_value());
    CHECK(obs.values[5] == 1.0);
    CHECK_FALSE(obs.values[6].has_value());

    c.degraded_fraction = 1.0;
    CHECK(build_observations(target, c, rng).observed_days() == 0);
    c.degrade_mode = DegradeMode::noisy;
    obs = build_observations(target, c, rng);
    CHECK(obs.observed_days() == 23);
    int changed = 0;
    for (const auto& v : obs.values)
        if (v) changed += *v != 1.0;
    CHECK(changed == 23);

    c.observation_interval = 0;
    CHECK(build_observations(target, c, rng).observed_days() == 0);
}

TEST_CASE("degraded fraction is about ten percent") {
    const std::vector<double> target(5001, 1.0);
    Config c;
    RngStream rng(2);
    const auto obs = build_observations(target, c, rng);
    const double sampled = 1000;
    const double dropped = (sampled - obs.observed_days()) / sampled;
    CHECK(std::abs(dropped - 0.1) < 3 * std::sqrt(0.09 / sampled));
}

TEST_CASE("without noise, perturbation or observations the filter reproduces the simulator") {
    const auto v = ir64();
    const auto weather = wofost::constant_weather(v, 27, 1000, 120);
    Config c;
    c.members = 5;
    c.process_noise = 0.0;
    c.parameter_noise = 0.0;
    c.initial_spread = 0.0;
    c.observation_interval = 0;
    RngStream rng(9);
    ObservationSeries none{std::vector<std::optional<double>>(120)};
    const auto out = assimilate_season(v, weather, none, c, rng);
    CHECK(out.simulated == wofost::simulate_season(v, weather));
    for (std::size_t t = 0; t < 120; ++t)
        CHECK(out.assimilated[t] == doctest::Approx(out.simulated[t]).epsilon(1e-14));
}

TEST_CASE("a vanishing gain leaves the free-running ensemble mean") {
    const auto v = ir64();
    const auto weather = wofost::constant_weather(v, 27, 1000, 120);
    std::vector<double> target(120, 5.0);
    Config c;
    c.degraded_fraction = 0.0;
    RngStream obs_rng(1);
    const auto obs = build_observations(target, c, obs_rng);
    ObservationSeries none{std::vector<std::optional<double>>(120)};

    c.observation_noise = 1e16;
    RngStream a(33), b(33);
    const auto with = assimilate_season(v, weather, obs, c, a);
    const auto without = assimilate_season(v, weather, none, c, b);
    for (std::size_t t = 0; t < 120; ++t) CHECK(std::abs(with.assimilated[t] - without.assimilated[t]) < 1e-8);
}

TEST_CASE("assimilation pulls the trajectory toward the observations") {
    const auto v = ir64();
    RngStream truth(7);
    const auto target = wofost::target_trajectory(v, truth);
    // A biased candidate: too cold and too dry.
    const auto weather = wofost::constant_weather(v, 26, 850, 120);
    Config c;
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RngStream obs_rng(seed, 1), rng(seed, 2);
        const auto obs = build_observations(target, c, obs_rng);
        const auto out = assimilate_season(v, weather, obs, c, rng);
        double a = 0, s = 0;
        for (std::size_t t = 0; t < 120; ++t) {
            a += (out.assimilated[t] - target[t]) * (out.assimilated[t] - target[t]);
            s += (out.simulated[t] - target[t]) * (out.simulated[t] - target[t]);
        }
        wins += a <= s;
    }
    CHECK(wins == 10);
}

TEST_CASE("assimilation is deterministic and bounded") {
    const auto v = ir64();
    RngStream truth(7);
    const auto target = wofost::target_trajectory(v, truth);
    Config c;
    c.degrade_mode = DegradeMode::noisy;
    RngStream o1(1), o2(1), r1(2), r2(2);
    const auto obs1 = build_observations(target, c, o1);
    const auto obs2 = build_observations(target, c, o2);
    const auto weather = wofost::constant_weather(v, 28, 1000, 120);
    const auto a = assimilate_season(v, weather, obs1, c, r1);
    const auto b = assimilate_season(v, weather, obs2, c, r2);
    CHECK(a.assimilated == b.assimilated);
    for (double x : a.assimilated) {
        CHECK(x >= 0.0);
        CHECK(x <= v.crop_params.lai_max);
    }
}

TEST_CASE("parameter perturbation scales the growth inputs") {
    const auto v = ir64();
    const auto p = perturb_variety(v, 0.1);
    CHECK(p.crop_params.rgrlai == doctest::Approx(0.044));
    CHECK(p.irrad == doctest::Approx(v.irrad * 1.1));
    CHECK(p.crop_params.lai_max == v.crop_params.lai_max);
    CHECK(wofost::soil_moisture(p.smtab_max(), p.soil.fc, p.soil.wp) == doctest::Approx(1.0));
    const auto floor = perturb_variety(v, -2.0);
    CHECK(floor.crop_params.rgrlai == 0.0);
    CHECK(floor.soil.fc == v.soil.fc);
}

TEST_CASE("config validation") {
    Config c;
    c.members = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = Config{};
    c.observation_noise = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = Config{};
    c.degraded_fraction = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
