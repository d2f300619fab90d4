#include "cropcal/enkf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cropcal::enkf {

std::string_view to_string(DegradeMode mode) noexcept {
    return mode == DegradeMode::missing ? "missing" : "noisy";
}

std::optional<DegradeMode> parse_degrade_mode(std::string_view text) {
    if (text == "missing") return DegradeMode::missing;
    if (text == "noisy") return DegradeMode::noisy;
    return std::nullopt;
}

void Config::validate() const {
    if (members < 2) throw ConfigError("enkf: ensemble needs at least 2 members");
    if (!(observation_noise > 0.0)) throw ConfigError("enkf: observation noise R must be positive");
    if (!(process_noise >= 0.0)) throw ConfigError("enkf: process noise Q must be non-negative");
    if (observation_interval < 0) throw ConfigError("enkf: observation interval must be >= 0");
    if (!(degraded_fraction >= 0.0 && degraded_fraction <= 1.0))
        throw ConfigError("enkf: degraded fraction must lie in [0, 1]");
    if (!(parameter_noise >= 0.0)) throw ConfigError("enkf: parameter noise must be non-negative");
    if (!(initial_spread >= 0.0)) throw ConfigError("enkf: initial spread must be non-negative");
    if (!(noisy_variance_factor >= 0.0))
        throw ConfigError("enkf: noisy variance factor must be non-negative");
}

double ensemble_mean(std::span<const double> members) {
    if (members.empty()) throw std::invalid_argument("ensemble_mean: empty ensemble");
    return std::accumulate(members.begin(), members.end(), 0.0) /
           static_cast<double>(members.size());
}

double ensemble_covariance(std::span<const double> members, double mean) {
    if (members.size() < 2) throw std::invalid_argument("ensemble_covariance: need at least 2 members");
    double sum = 0.0;
    for (double a : members) sum += (a - mean) * (a - mean);
    return sum / static_cast<double>(members.size() - 1);
}

double kalman_gain(double P, double H, double R) {
    const double innovation = H * P * H + R;
    if (innovation == 0.0 || !std::isfinite(innovation))
        throw std::domain_error("kalman_gain: innovation variance H P H + R must be non-zero");
    return P * H / innovation;
}

std::vector<double> perturb_observation(double y, double R, std::size_t count, RngStream& rng) {
    if (!(R >= 0.0)) throw std::invalid_argument("perturb_observation: R must be non-negative");
    const double sd = std::sqrt(R);
    std::vector<double> out(count);
    for (double& v : out) v = rng.normal(y, sd);
    return out;
}

EnsembleState update(const EnsembleState& state, std::span<const double> perturbed_obs, double K,
                     double H) {
    if (perturbed_obs.size() != state.members.size())
        throw std::invalid_argument("enkf update: " + std::to_string(perturbed_obs.size()) +
                                    " observations for " + std::to_string(state.members.size()) +
                                    " members");
    EnsembleState out = state;
    for (std::size_t i = 0; i < out.members.size(); ++i)
        out.members[i] += K * (perturbed_obs[i] - H * out.members[i]);
    return out;
}

std::size_t ObservationSeries::observed_days() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

ObservationSeries build_observations(std::span<const double> target, const Config& config,
                                     RngStream& rng) {
    ObservationSeries obs;
    obs.values.assign(target.size(), std::nullopt);
    if (config.observation_interval <= 0) return obs;
    const auto interval = static_cast<std::size_t>(config.observation_interval);
    const double noisy_sd = std::sqrt(config.noisy_variance_factor * config.observation_noise);
    for (std::size_t t = interval; t < target.size(); t += interval) {
        const bool degraded = rng.uniform() < config.degraded_fraction;
        const double noise = rng.normal(0.0, noisy_sd);
        if (!degraded)
            obs.values[t] = target[t];
        else if (config.degrade_mode == DegradeMode::noisy)
            obs.values[t] = std::max(0.0, target[t] + noise);
    }
    return obs;
}

wofost::CropVariety perturb_variety(const wofost::CropVariety& variety, double eps) {
    const double factor = std::max(0.0, 1.0 + eps);
    wofost::CropVariety out = variety;
    out.crop_params.rgrlai *= factor;
    out.irrad *= factor;
    // Scaling FC, WP (and an explicit SMTAB_MAX) together keeps the moisture ratio.
    out.crop_params.smtab_max = variety.smtab_max() * factor;
    out.soil.fc *= factor;
    out.soil.wp *= factor;
    if (!(out.soil.fc > out.soil.wp)) {  // factor clamped to 0
        out.soil = variety.soil;
        out.crop_params.smtab_max = variety.smtab_max();
    }
    return out;
}

AssimilationResult assimilate_season(const wofost::CropVariety& variety,
                                     std::span<const wofost::DailyWeather> weather,
                                     const ObservationSeries& observations, const Config& config,
                                     RngStream& rng, const wofost::SimulationSettings& settings) {
    config.validate();
    AssimilationResult out;
    out.simulated = wofost::simulate_season(variety, weather, settings);
    const std::size_t days = out.simulated.size();
    if (observations.values.size() != days)
        throw std::invalid_argument("assimilate_season: observation series has " +
                                    std::to_string(observations.values.size()) +
                                    " days, expected " + std::to_string(days));

    // Separate streams keep process noise identical whether or not observations arrive.
    RngStream param_rng = rng.derive(1);
    RngStream process_rng = rng.derive(2);
    RngStream obs_rng = rng.derive(3);

    const std::size_t M = config.members;
    std::vector<wofost::CropVariety> member_variety;
    member_variety.reserve(M);
    const double param_sd = std::sqrt(config.parameter_noise);
    for (std::size_t i = 0; i < M; ++i)
        member_variety.push_back(perturb_variety(variety, param_rng.normal(0.0, param_sd)));

    EnsembleState state;
    state.members.resize(M);
    for (std::size_t i = 0; i < M; ++i)
        state.members[i] = process_rng.normal(settings.lai0, config.initial_spread);

    const double process_sd = std::sqrt(config.process_noise);
    const double H = config.observation_operator;
    out.assimilated.resize(days);
    // Member states are left unbounded so noise and updates stay unbiased near
    // the 0 and LAI_MAX limits; the growth law and the reported mean are bounded.
    const double lai_max = variety.crop_params.lai_max;
    auto reported = [&] { return std::clamp(ensemble_mean(state.members), 0.0, lai_max); };
    out.assimilated[0] = reported();

    for (std::size_t t = 0; t + 1 < days; ++t) {
        for (std::size_t i = 0; i < M; ++i) {
            double& a = state.members[i];
            const double cap = member_variety[i].crop_params.lai_max;
            a += wofost::lai_step(std::clamp(a, 0.0, cap), member_variety[i], weather[t], settings);
            a += process_rng.normal(0.0, process_sd);
        }
        state.day = static_cast<int>(t + 1);

        if (const auto& y = observations.values[t + 1]; y.has_value()) {
            const double mu = ensemble_mean(state.members);
            const double P = ensemble_covariance(state.members, mu);
            const double K = kalman_gain(P, H, config.observation_noise);
            const auto perturbed = perturb_observation(*y, config.observation_noise, M, obs_rng);
            state = update(state, perturbed, K, H);
        }

        out.assimilated[t + 1] = reported();
        if (!std::isfinite(out.assimilated[t + 1]))
            throw NumericalError("assimilate_season: ensemble mean became non-finite on day " +
                                 std::to_string(t + 1));
    }
    return out;
}

}  // namespace cropcal::enkf
