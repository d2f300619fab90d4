#include "cropcal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace cropcal::harness {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kAlgorithmNames{"demmogc", "de", "ga", "pso", "hho"};

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

void require_object(const json& j, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
}

void reject_unknown(const json& j, std::string_view where,
                    std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(std::string(where) + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
void read(const json& j, std::string_view key, T& field, std::string_view where) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        field = it->template get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + "." + std::string(key) + ": " + e.what());
    }
}

template <typename T>
void read_optional(const json& j, std::string_view key, std::optional<T>& field,
                   std::string_view where) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (it->is_null()) {
        field.reset();
        return;
    }
    T value{};
    read(j, key, value, where);
    field = value;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_nan(const json& j) { return j.is_null() ? nan() : j.get<double>(); }

json to_json(const metrics::MetricReport& r) {
    return {{"mse", r.mse}, {"mae", r.mae}, {"rmse", r.rmse}, {"correlation", number_or_null(r.correlation)}};
}

metrics::MetricReport report_from_json(const json& j) {
    metrics::MetricReport r;
    r.mse = j.at("mse").get<double>();
    r.mae = j.at("mae").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.correlation = number_or_nan(j.at("correlation"));
    return r;
}

json to_json(const metrics::RunSummary& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"std", s.std}};
}

metrics::RunSummary summary_from_json(const json& j) {
    metrics::RunSummary s;
    s.count = j.at("count").get<std::size_t>();
    s.mean = j.at("mean").get<double>();
    s.median = j.at("median").get<double>();
    s.std = j.at("std").get<double>();
    return s;
}

json to_json(const metrics::TestResult& t) {
    return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"exact", t.exact}};
}

metrics::TestResult test_from_json(const json& j) {
    metrics::TestResult t;
    t.statistic = j.at("statistic").get<double>();
    t.p_value = j.at("p_value").get<double>();
    t.exact = j.at("exact").get<bool>();
    return t;
}

Algorithm algorithm_from(const json& j, std::string_view where) {
    const auto text = j.get<std::string>();
    const auto a = parse_algorithm(text);
    if (!a) throw ConfigError(std::string(where) + ": unknown algorithm \"" + text + "\"");
    return *a;
}

Mode mode_from(const json& j, std::string_view where) {
    const auto text = j.get<std::string>();
    const auto m = parse_mode(text);
    if (!m) throw ConfigError(std::string(where) + ": unknown mode \"" + text + "\"");
    return *m;
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

std::string fmt(double x) {
    if (std::isnan(x)) return "";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void row(std::ostringstream& out, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out << ',';
        out << f;
        first = false;
    }
    out << "\r\n";
}

std::string slug(std::string_view name) {
    std::string out;
    for (char c : name) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u))
            out += static_cast<char>(std::tolower(u));
        else if (!out.empty() && out.back() != '-')
            out += '-';
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "variety" : out;
}

double mean_ignoring_nan(const std::vector<double>& xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : xs)
        if (!std::isnan(x)) {
            sum += x;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : nan();
}

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same_report(const metrics::MetricReport& a, const metrics::MetricReport& b) {
    return same_double(a.mse, b.mse) && same_double(a.mae, b.mae) && same_double(a.rmse, b.rmse) &&
           same_double(a.correlation, b.correlation);
}

}  // namespace

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

std::string_view to_string(Algorithm a) noexcept { return kAlgorithmNames[static_cast<std::size_t>(a)]; }

std::string_view to_string(Mode m) noexcept {
    return m == Mode::assimilation ? "assimilation" : "wofost-only";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) {
    auto key = lower(text);
    if (key == "de-mmogc") key = "demmogc";
    for (std::size_t i = 0; i < kAlgorithmNames.size(); ++i)
        if (key == kAlgorithmNames[i]) return static_cast<Algorithm>(i);
    return std::nullopt;
}

std::optional<Mode> parse_mode(std::string_view text) {
    const auto key = lower(text);
    if (key == "assimilation") return Mode::assimilation;
    if (key == "wofost-only" || key == "wofost_only" || key == "wofost") return Mode::wofost_only;
    return std::nullopt;
}

std::vector<Algorithm> all_algorithms() {
    return {Algorithm::demmogc, Algorithm::de, Algorithm::ga, Algorithm::pso, Algorithm::hho};
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

wofost::CropVariety ExperimentConfig::resolve_variety() const {
    if (inline_variety) return *inline_variety;
    auto preset = wofost::find_preset(variety);
    if (!preset) throw ConfigError("unknown variety \"" + variety + "\"");
    return *preset;
}

Bounds ExperimentConfig::search_bounds() const {
    const auto v = resolve_variety();
    if (!bounds_lower && !bounds_upper) return v.search_bounds();
    const Bounds def = v.search_bounds();
    try {
        return Bounds(bounds_lower.value_or(def.lower()), bounds_upper.value_or(def.upper()));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bounds: ") + e.what());
    }
}

void ExperimentConfig::validate() const {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    const auto v = resolve_variety();
    v.validate();
    const Bounds b = search_bounds();
    if (b.dimension() != 2) throw ConfigError("bounds: the search space is (TAVG, RAIN), dimension 2");
    if (simulation.days < 2) throw ConfigError("simulation.days must be >= 2");
    if (!(simulation.lai0 >= 0.0)) throw ConfigError("simulation.lai0 must be non-negative");
    if (!(simulation.irrad_ref > 0.0)) throw ConfigError("simulation.irrad_ref must be positive");
    if (!(target.jitter >= 0.0)) throw ConfigError("target.jitter must be non-negative");
    enkf.validate();
    switch (algorithm) {
        case Algorithm::demmogc: demmogc.validate(); break;
        case Algorithm::de: de.validate(); break;
        case Algorithm::ga: ga.validate(); break;
        case Algorithm::pso: pso.validate(); break;
        case Algorithm::hho: hho.validate(); break;
    }
}

std::uint64_t optimizer_stream_id(Algorithm a, std::string_view variety, int run) {
    std::uint64_t h = hash_name(to_string(a));
    h = mix64(h ^ hash_name(lower(variety)));
    return mix64(h ^ static_cast<std::uint64_t>(run + 1));
}

std::uint64_t data_stream_id(std::string_view variety, int run) {
    std::uint64_t h = hash_name("target-data");
    h = mix64(h ^ hash_name(lower(variety)));
    return mix64(h ^ static_cast<std::uint64_t>(run + 1));
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

bool same_outcome(const ExperimentResult& a, const ExperimentResult& b) {
    auto same_series = [](const std::vector<double>& x, const std::vector<double>& y) {
        return x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin(), same_double);
    };
    return a.algorithm == b.algorithm && a.mode == b.mode && a.variety == b.variety && a.run == b.run &&
           a.seed == b.seed && a.stream_id == b.stream_id && same_report(a.assimilation, b.assimilation) &&
           same_report(a.wofost, b.wofost) && same_series(a.best_genome, b.best_genome) &&
           same_double(a.best_fitness, b.best_fitness) && same_series(a.history, b.history) &&
           a.evaluations == b.evaluations && same_series(a.target, b.target) &&
           same_series(a.simulated, b.simulated) && same_series(a.assimilated, b.assimilated) &&
           a.observed == b.observed;
}

OptimizationResult run_optimizer(Algorithm algorithm, const ExperimentConfig& config,
                                 const Objective& objective, const Bounds& bounds, RngStream& rng,
                                 const GenerationObserver& observer) {
    switch (algorithm) {
        case Algorithm::demmogc: return demmogc::optimize(objective, bounds, config.demmogc, rng, observer);
        case Algorithm::de: return baselines::de_optimize(objective, bounds, config.de, rng, observer);
        case Algorithm::ga: return baselines::ga_optimize(objective, bounds, config.ga, rng, observer);
        case Algorithm::pso: return baselines::pso_optimize(objective, bounds, config.pso, rng, observer);
        case Algorithm::hho: return baselines::hho_optimize(objective, bounds, config.hho, rng, observer);
    }
    throw ConfigError("unknown algorithm");
}

ExperimentResult calibrate(const ExperimentConfig& config, int run) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto variety = config.resolve_variety();
    const Bounds bounds = config.search_bounds();
    const auto& settings = config.simulation;

    ExperimentResult result;
    result.algorithm = config.algorithm;
    result.mode = config.mode;
    result.variety = variety.name;
    result.run = run;
    result.seed = config.seed;
    result.stream_id = optimizer_stream_id(config.algorithm, variety.name, run);

    // Target and observations depend on (variety, run) only, so every
    // algorithm in a comparison calibrates against the same data.
    const RngStream data(config.seed, data_stream_id(variety.name, run));
    RngStream target_rng = data.derive(1);
    RngStream obs_rng = data.derive(2);
    const RngStream ensemble_rng = data.derive(3);

    const double tavg = config.target.tavg.value_or(variety.weather.tavg_mid());
    const double rain = config.target.rain.value_or(variety.weather.rain_mid());
    const auto truth_weather =
        wofost::jittered_weather(variety, tavg, rain, settings.days, config.target.jitter, target_rng);
    result.target = wofost::simulate_season(variety, truth_weather, settings);
    const auto observations = enkf::build_observations(result.target, config.enkf, obs_rng);
    result.observed = observations.values;

    // Each evaluation replays the same ensemble noise (common random numbers).
    auto run_season = [&](std::span<const double> genome, bool assimilate) {
        const auto weather = wofost::constant_weather(variety, genome[0], genome[1], settings.days);
        if (!assimilate) return enkf::AssimilationResult{{}, wofost::simulate_season(variety, weather, settings)};
        RngStream rng = ensemble_rng;
        return enkf::assimilate_season(variety, weather, observations, config.enkf, rng, settings);
    };
    const bool assimilate = config.mode == Mode::assimilation;
    const Objective objective = [&](std::span<const double> genome) {
        const auto season = run_season(genome, assimilate);
        return metrics::mse(result.target, assimilate ? season.assimilated : season.simulated);
    };

    RngStream rng(config.seed, result.stream_id);
    OptimizationResult opt;
    try {
        opt = run_optimizer(config.algorithm, config, objective, bounds, rng);
    } catch (const NumericalError& e) {
        throw NumericalError("calibrate " + std::string(to_string(config.algorithm)) + " on " +
                             variety.name + " run " + std::to_string(run) + ": " + e.what());
    }

    result.best_genome = opt.best.genome;
    result.best_fitness = opt.best.fitness;
    result.history = std::move(opt.history);
    result.evaluations = opt.evaluations;

    const auto season = run_season(result.best_genome, true);
    result.simulated = season.simulated;
    result.assimilated = season.assimilated;
    result.assimilation = metrics::report(result.target, result.assimilated);
    result.wofost = metrics::report(result.target, result.simulated);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

ComparisonResult compare(const ExperimentConfig& base, const ComparisonPlan& plan) {
    if (plan.algorithms.empty()) throw ConfigError("compare: no algorithms");
    if (plan.varieties.empty()) throw ConfigError("compare: no varieties");
    if (base.runs < 1) throw ConfigError("runs must be >= 1");

    struct Cell {
        ExperimentConfig config;
        int run;
    };
    std::vector<Cell> cells;
    for (const auto& name : plan.varieties) {
        for (Algorithm a : plan.algorithms) {
            ExperimentConfig c = base;
            if (!(base.inline_variety && base.inline_variety->name == name)) {
                c.variety = name;
                c.inline_variety.reset();
            }
            c.algorithm = a;
            c.validate();
            for (int r = 0; r < base.runs; ++r) cells.push_back({c, r});
        }
    }

    ComparisonResult out;
    out.cells.resize(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                out.cells[i] = calibrate(cells[i].config, cells[i].run);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    unsigned jobs = plan.jobs ? plan.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, cells.size()));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);

    summarize(out);
    return out;
}

void summarize(ComparisonResult& result) {
    result.rows.clear();
    result.wilcoxon.clear();

    // Group cells by (variety, algorithm) in first-appearance order.
    std::vector<std::pair<std::string, Algorithm>> keys;
    std::map<std::pair<std::string, Algorithm>, std::vector<const ExperimentResult*>> groups;
    for (const auto& cell : result.cells) {
        const auto key = std::make_pair(cell.variety, cell.algorithm);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&cell);
    }
    for (auto& [key, members] : groups)
        std::stable_sort(members.begin(), members.end(),
                         [](const auto* a, const auto* b) { return a->run < b->run; });

    auto column = [](const std::vector<const ExperimentResult*>& members, auto pick) {
        std::vector<double> xs;
        for (const auto* m : members) xs.push_back(pick(*m));
        return xs;
    };
    auto mean_report = [&](const std::vector<const ExperimentResult*>& members, auto which) {
        metrics::MetricReport r;
        auto mean = [](const std::vector<double>& xs) { return metrics::summarize_runs(xs).mean; };
        r.mse = mean(column(members, [&](const auto& m) { return which(m).mse; }));
        r.mae = mean(column(members, [&](const auto& m) { return which(m).mae; }));
        r.rmse = mean(column(members, [&](const auto& m) { return which(m).rmse; }));
        r.correlation = mean_ignoring_nan(column(members, [&](const auto& m) { return which(m).correlation; }));
        return r;
    };

    for (const auto& key : keys) {
        const auto& members = groups[key];
        ComparisonRow row;
        row.variety = key.first;
        row.algorithm = key.second;
        row.runs = members.size();
        row.assimilation = mean_report(members, [](const ExperimentResult& m) { return m.assimilation; });
        row.wofost = mean_report(members, [](const ExperimentResult& m) { return m.wofost; });
        row.rmse = metrics::summarize_runs(column(members, [](const auto& m) { return m.assimilation.rmse; }));
        row.mse = metrics::summarize_runs(column(members, [](const auto& m) { return m.assimilation.mse; }));
        result.rows.push_back(row);
    }

    for (const auto& key : keys) {
        if (key.second != Algorithm::demmogc) continue;
        const auto ours = column(groups[key], [](const auto& m) { return m.assimilation.rmse; });
        for (const auto& other : keys) {
            if (other.first != key.first || other.second == Algorithm::demmogc) continue;
            const auto theirs = column(groups[other], [](const auto& m) { return m.assimilation.rmse; });
            WilcoxonRow w;
            w.variety = key.first;
            w.baseline = other.second;
            w.rank_sum = metrics::wilcoxon_rank_sum(ours, theirs);
            if (ours.size() == theirs.size()) w.signed_rank = metrics::wilcoxon_signed_rank(ours, theirs);
            result.wilcoxon.push_back(w);
        }
    }
}

// ---------------------------------------------------------------------------
// Worked-example check
// ---------------------------------------------------------------------------

bool AppendixReport::all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.passed; });
}

const CheckEntry* AppendixReport::find(std::string_view name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

AppendixReport appendix_check(const AppendixFixture& fixture, const AppendixTolerances& tolerances) {
    AppendixReport report;
    auto text = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", x);
        return std::string(buf);
    };
    auto scalar = [&](std::string name, double expected, double actual, double tol) {
        report.entries.push_back(
            {std::move(name), text(expected), text(actual), tol, std::abs(actual - expected) <= tol});
    };

    const double mean = enkf::ensemble_mean(fixture.forecast);
    const double P = enkf::ensemble_covariance(fixture.forecast, mean);
    const double K = enkf::kalman_gain(P, fixture.H, fixture.R);
    scalar("mean", fixture.expected_mean, mean, tolerances.mean);
    scalar("covariance", fixture.expected_covariance, P, tolerances.covariance);
    scalar("gain", fixture.expected_gain, K, tolerances.gain);

    enkf::EnsembleState state{fixture.forecast, 0};
    const auto updated = enkf::update(state, fixture.perturbed_obs, fixture.gain_override.value_or(K), fixture.H);
    CheckEntry ensemble{"updated_ensemble", "[", "[", tolerances.updated, true};
    if (updated.members.size() != fixture.expected_updated.size()) ensemble.passed = false;
    for (std::size_t i = 0; i < updated.members.size(); ++i) {
        const char* sep = i ? ", " : "";
        ensemble.actual += sep + text(updated.members[i]);
        if (i < fixture.expected_updated.size()) {
            ensemble.expected += sep + text(fixture.expected_updated[i]);
            if (std::abs(updated.members[i] - fixture.expected_updated[i]) > tolerances.updated)
                ensemble.passed = false;
        }
    }
    ensemble.expected += "]";
    ensemble.actual += "]";
    report.entries.push_back(ensemble);
    scalar("updated_mean", fixture.expected_updated_mean, enkf::ensemble_mean(updated.members),
           tolerances.updated_mean);
    return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

json to_json(const wofost::CropVariety& v) {
    json crop = {{"tbase", v.crop_params.tbase}, {"rgrlai", v.crop_params.rgrlai},
                 {"lai_max", v.crop_params.lai_max}};
    crop["smtab_max"] = v.crop_params.smtab_max ? json(*v.crop_params.smtab_max) : json(nullptr);
    return {{"name", v.name},
            {"crop", v.crop},
            {"soil", {{"fc", v.soil.fc}, {"wp", v.soil.wp}, {"bd", v.soil.bd}}},
            {"crop_params", crop},
            {"weather",
             {{"tavg_low", v.weather.tavg_low},
              {"tavg_high", v.weather.tavg_high},
              {"rain_low", v.weather.rain_low},
              {"rain_high", v.weather.rain_high}}},
            {"irrad", v.irrad}};
}

wofost::CropVariety variety_from_json(const json& j) {
    constexpr std::string_view where = "variety";
    require_object(j, where);
    reject_unknown(j, where, {"name", "crop", "soil", "crop_params", "weather", "irrad", "base"});
    wofost::CropVariety v;
    // "base" starts from a preset and overrides individual fields.
    if (j.contains("base")) {
        const auto name = j.at("base").get<std::string>();
        auto preset = wofost::find_preset(name);
        if (!preset) throw ConfigError("variety.base: unknown variety \"" + name + "\"");
        v = *preset;
    }
    read(j, "name", v.name, where);
    read(j, "crop", v.crop, where);
    read(j, "irrad", v.irrad, where);
    if (const auto it = j.find("soil"); it != j.end()) {
        require_object(*it, "variety.soil");
        reject_unknown(*it, "variety.soil", {"fc", "wp", "bd"});
        read(*it, "fc", v.soil.fc, "variety.soil");
        read(*it, "wp", v.soil.wp, "variety.soil");
        read(*it, "bd", v.soil.bd, "variety.soil");
    }
    if (const auto it = j.find("crop_params"); it != j.end()) {
        require_object(*it, "variety.crop_params");
        reject_unknown(*it, "variety.crop_params", {"tbase", "rgrlai", "lai_max", "smtab_max"});
        read(*it, "tbase", v.crop_params.tbase, "variety.crop_params");
        read(*it, "rgrlai", v.crop_params.rgrlai, "variety.crop_params");
        read(*it, "lai_max", v.crop_params.lai_max, "variety.crop_params");
        read_optional(*it, "smtab_max", v.crop_params.smtab_max, "variety.crop_params");
    }
    if (const auto it = j.find("weather"); it != j.end()) {
        require_object(*it, "variety.weather");
        reject_unknown(*it, "variety.weather", {"tavg_low", "tavg_high", "rain_low", "rain_high"});
        read(*it, "tavg_low", v.weather.tavg_low, "variety.weather");
        read(*it, "tavg_high", v.weather.tavg_high, "variety.weather");
        read(*it, "rain_low", v.weather.rain_low, "variety.weather");
        read(*it, "rain_high", v.weather.rain_high, "variety.weather");
    }
    if (v.name.empty()) throw ConfigError("variety.name must be set");
    v.validate();
    return v;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["variety"] = c.inline_variety ? to_json(*c.inline_variety) : json(c.variety);
    j["algorithm"] = std::string(to_string(c.algorithm));
    j["mode"] = std::string(to_string(c.mode));
    j["runs"] = c.runs;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["simulation"] = {{"days", c.simulation.days}, {"lai0", c.simulation.lai0},
                       {"irrad_ref", c.simulation.irrad_ref}};
    j["target"] = {{"tavg", c.target.tavg ? json(*c.target.tavg) : json(nullptr)},
                   {"rain", c.target.rain ? json(*c.target.rain) : json(nullptr)},
                   {"jitter", c.target.jitter}};
    j["bounds"] = {{"lower", c.bounds_lower ? json(*c.bounds_lower) : json(nullptr)},
                   {"upper", c.bounds_upper ? json(*c.bounds_upper) : json(nullptr)}};
    j["enkf"] = {{"members", c.enkf.members},
                 {"process_noise", c.enkf.process_noise},
                 {"observation_noise", c.enkf.observation_noise},
                 {"observation_operator", c.enkf.observation_operator},
                 {"observation_interval", c.enkf.observation_interval},
                 {"degraded_fraction", c.enkf.degraded_fraction},
                 {"degrade_mode", std::string(enkf::to_string(c.enkf.degrade_mode))},
                 {"noisy_variance_factor", c.enkf.noisy_variance_factor},
                 {"parameter_noise", c.enkf.parameter_noise},
                 {"initial_spread", c.enkf.initial_spread}};
    j["demmogc"] = {{"np", c.demmogc.np},
                    {"generations", c.demmogc.generations},
                    {"F", c.demmogc.F},
                    {"Cr", c.demmogc.Cr},
                    {"pbest_fraction", c.demmogc.pbest_fraction},
                    {"elite_fraction", c.demmogc.elite_fraction},
                    {"archive_factor", c.demmogc.archive_factor},
                    {"unified_strategy", c.demmogc.unified_strategy
                                             ? json(std::string(mutation::to_string(*c.demmogc.unified_strategy)))
                                             : json(nullptr)}};
    j["de"] = {{"np", c.de.np},
               {"generations", c.de.generations},
               {"strategy", std::string(mutation::to_string(c.de.strategy))},
               {"F_low", c.de.F_low},
               {"F_high", c.de.F_high},
               {"Cr", c.de.Cr},
               {"pbest_fraction", c.de.pbest_fraction},
               {"archive_factor", c.de.archive_factor}};
    j["ga"] = {{"np", c.ga.np},
               {"generations", c.ga.generations},
               {"tournament_size", c.ga.tournament_size},
               {"blend_alpha", c.ga.blend_alpha},
               {"mutation_mu", c.ga.mutation_mu},
               {"mutation_sigma", c.ga.mutation_sigma},
               {"indpb", c.ga.indpb},
               {"elites", c.ga.elites}};
    j["pso"] = {{"swarm", c.pso.swarm},
                {"iterations", c.pso.iterations},
                {"inertia", c.pso.inertia},
                {"cognitive", c.pso.cognitive},
                {"social", c.pso.social},
                {"velocity_fraction", c.pso.velocity_fraction}};
    j["hho"] = {{"hawks", c.hho.hawks},
                {"iterations", c.hho.iterations},
                {"levy_beta", c.hho.levy_beta},
                {"energy_override", c.hho.energy_override ? json(*c.hho.energy_override) : json(nullptr)}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    require_object(j, "config");
    reject_unknown(j, "config",
                   {"variety", "algorithm", "mode", "runs", "seed", "output_dir", "simulation", "target",
                    "bounds", "enkf", "demmogc", "de", "ga", "pso", "hho"});
    ExperimentConfig c;
    try {
        if (const auto it = j.find("variety"); it != j.end()) {
            if (it->is_string()) {
                c.variety = it->get<std::string>();
            } else {
                c.inline_variety = variety_from_json(*it);
                c.variety = c.inline_variety->name;
            }
        }
        if (j.contains("algorithm")) c.algorithm = algorithm_from(j.at("algorithm"), "config.algorithm");
        if (j.contains("mode")) c.mode = mode_from(j.at("mode"), "config.mode");
        read(j, "runs", c.runs, "config");
        read(j, "seed", c.seed, "config");
        read(j, "output_dir", c.output_dir, "config");

        if (const auto it = j.find("simulation"); it != j.end()) {
            require_object(*it, "simulation");
            reject_unknown(*it, "simulation", {"days", "lai0", "irrad_ref"});
            read(*it, "days", c.simulation.days, "simulation");
            read(*it, "lai0", c.simulation.lai0, "simulation");
            read(*it, "irrad_ref", c.simulation.irrad_ref, "simulation");
        }
        if (const auto it = j.find("target"); it != j.end()) {
            require_object(*it, "target");
            reject_unknown(*it, "target", {"tavg", "rain", "jitter"});
            read_optional(*it, "tavg", c.target.tavg, "target");
            read_optional(*it, "rain", c.target.rain, "target");
            read(*it, "jitter", c.target.jitter, "target");
        }
        if (const auto it = j.find("bounds"); it != j.end()) {
            require_object(*it, "bounds");
            reject_unknown(*it, "bounds", {"lower", "upper"});
            read_optional(*it, "lower", c.bounds_lower, "bounds");
            read_optional(*it, "upper", c.bounds_upper, "bounds");
        }
        if (const auto it = j.find("enkf"); it != j.end()) {
            constexpr std::string_view w = "enkf";
            require_object(*it, w);
            reject_unknown(*it, w,
                           {"members", "process_noise", "observation_noise", "observation_operator",
                            "observation_interval", "degraded_fraction", "degrade_mode",
                            "noisy_variance_factor", "parameter_noise", "initial_spread"});
            read(*it, "members", c.enkf.members, w);
            read(*it, "process_noise", c.enkf.process_noise, w);
            read(*it, "observation_noise", c.enkf.observation_noise, w);
            read(*it, "observation_operator", c.enkf.observation_operator, w);
            read(*it, "observation_interval", c.enkf.observation_interval, w);
            read(*it, "degraded_fraction", c.enkf.degraded_fraction, w);
            read(*it, "noisy_variance_factor", c.enkf.noisy_variance_factor, w);
            read(*it, "parameter_noise", c.enkf.parameter_noise, w);
            read(*it, "initial_spread", c.enkf.initial_spread, w);
            if (it->contains("degrade_mode")) {
                const auto text = it->at("degrade_mode").get<std::string>();
                const auto mode = enkf::parse_degrade_mode(text);
                if (!mode) throw ConfigError("enkf.degrade_mode: unknown value \"" + text + "\"");
                c.enkf.degrade_mode = *mode;
            }
        }
        if (const auto it = j.find("demmogc"); it != j.end()) {
            constexpr std::string_view w = "demmogc";
            require_object(*it, w);
            reject_unknown(*it, w,
                           {"np", "generations", "F", "Cr", "pbest_fraction", "elite_fraction",
                            "archive_factor", "unified_strategy"});
            read(*it, "np", c.demmogc.np, w);
            read(*it, "generations", c.demmogc.generations, w);
            read(*it, "F", c.demmogc.F, w);
            read(*it, "Cr", c.demmogc.Cr, w);
            read(*it, "pbest_fraction", c.demmogc.pbest_fraction, w);
            read(*it, "elite_fraction", c.demmogc.elite_fraction, w);
            read(*it, "archive_factor", c.demmogc.archive_factor, w);
            if (const auto s = it->find("unified_strategy"); s != it->end()) {
                if (s->is_null()) {
                    c.demmogc.unified_strategy.reset();
                } else {
                    const auto text = s->get<std::string>();
                    const auto strategy = mutation::parse_strategy(text);
                    if (!strategy) throw ConfigError("demmogc.unified_strategy: unknown strategy \"" + text + "\"");
                    c.demmogc.unified_strategy = *strategy;
                }
            }
        }
        if (const auto it = j.find("de"); it != j.end()) {
            constexpr std::string_view w = "de";
            require_object(*it, w);
            reject_unknown(*it, w,
                           {"np", "generations", "strategy", "F_low", "F_high", "Cr", "pbest_fraction",
                            "archive_factor"});
            read(*it, "np", c.de.np, w);
            read(*it, "generations", c.de.generations, w);
            read(*it, "F_low", c.de.F_low, w);
            read(*it, "F_high", c.de.F_high, w);
            read(*it, "Cr", c.de.Cr, w);
            read(*it, "pbest_fraction", c.de.pbest_fraction, w);
            read(*it, "archive_factor", c.de.archive_factor, w);
            if (it->contains("strategy")) {
                const auto text = it->at("strategy").get<std::string>();
                const auto strategy = mutation::parse_strategy(text);
                if (!strategy) throw ConfigError("de.strategy: unknown strategy \"" + text + "\"");
                c.de.strategy = *strategy;
            }
        }
        if (const auto it = j.find("ga"); it != j.end()) {
            constexpr std::string_view w = "ga";
            require_object(*it, w);
            reject_unknown(*it, w,
                           {"np", "generations", "tournament_size", "blend_alpha", "mutation_mu",
                            "mutation_sigma", "indpb", "elites"});
            read(*it, "np", c.ga.np, w);
            read(*it, "generations", c.ga.generations, w);
            read(*it, "tournament_size", c.ga.tournament_size, w);
            read(*it, "blend_alpha", c.ga.blend_alpha, w);
            read(*it, "mutation_mu", c.ga.mutation_mu, w);
            read(*it, "mutation_sigma", c.ga.mutation_sigma, w);
            read(*it, "indpb", c.ga.indpb, w);
            read(*it, "elites", c.ga.elites, w);
        }
        if (const auto it = j.find("pso"); it != j.end()) {
            constexpr std::string_view w = "pso";
            require_object(*it, w);
            reject_unknown(*it, w, {"swarm", "iterations", "inertia", "cognitive", "social", "velocity_fraction"});
            read(*it, "swarm", c.pso.swarm, w);
            read(*it, "iterations", c.pso.iterations, w);
            read(*it, "inertia", c.pso.inertia, w);
            read(*it, "cognitive", c.pso.cognitive, w);
            read(*it, "social", c.pso.social, w);
            read(*it, "velocity_fraction", c.pso.velocity_fraction, w);
        }
        if (const auto it = j.find("hho"); it != j.end()) {
            constexpr std::string_view w = "hho";
            require_object(*it, w);
            reject_unknown(*it, w, {"hawks", "iterations", "levy_beta", "energy_override"});
            read(*it, "hawks", c.hho.hawks, w);
            read(*it, "iterations", c.hho.iterations, w);
            read(*it, "levy_beta", c.hho.levy_beta, w);
            read_optional(*it, "energy_override", c.hho.energy_override, w);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

json to_json(const ExperimentResult& r) {
    json observed = json::array();
    for (const auto& o : r.observed) observed.push_back(o ? json(*o) : json(nullptr));
    return {{"algorithm", std::string(to_string(r.algorithm))},
            {"mode", std::string(to_string(r.mode))},
            {"variety", r.variety},
            {"run", r.run},
            {"seed", r.seed},
            {"stream_id", r.stream_id},
            {"assimilation", to_json(r.assimilation)},
            {"wofost", to_json(r.wofost)},
            {"best_genome", r.best_genome},
            {"best_fitness", r.best_fitness},
            {"history", r.history},
            {"evaluations", r.evaluations},
            {"target", r.target},
            {"simulated", r.simulated},
            {"assimilated", r.assimilated},
            {"observed", observed}};
}

ExperimentResult result_from_json(const json& j) {
    ExperimentResult r;
    try {
        r.algorithm = algorithm_from(j.at("algorithm"), "result.algorithm");
        r.mode = mode_from(j.at("mode"), "result.mode");
        r.variety = j.at("variety").get<std::string>();
        r.run = j.at("run").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.stream_id = j.at("stream_id").get<std::uint64_t>();
        r.assimilation = report_from_json(j.at("assimilation"));
        r.wofost = report_from_json(j.at("wofost"));
        r.best_genome = j.at("best_genome").get<Genome>();
        r.best_fitness = j.at("best_fitness").get<double>();
        r.history = j.at("history").get<std::vector<double>>();
        r.evaluations = j.at("evaluations").get<std::size_t>();
        r.target = j.at("target").get<std::vector<double>>();
        r.simulated = j.at("simulated").get<std::vector<double>>();
        r.assimilated = j.at("assimilated").get<std::vector<double>>();
        for (const auto& o : j.at("observed"))
            r.observed.push_back(o.is_null() ? std::nullopt : std::optional<double>(o.get<double>()));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("result: ") + e.what());
    }
    return r;
}

json to_json(const ComparisonResult& result, bool include_cells) {
    json rows = json::array();
    for (const auto& row : result.rows)
        rows.push_back({{"variety", row.variety},
                        {"algorithm", std::string(to_string(row.algorithm))},
                        {"runs", row.runs},
                        {"assimilation", to_json(row.assimilation)},
                        {"wofost", to_json(row.wofost)},
                        {"rmse", to_json(row.rmse)},
                        {"mse", to_json(row.mse)}});
    json tests = json::array();
    for (const auto& w : result.wilcoxon)
        tests.push_back({{"variety", w.variety},
                         {"baseline", std::string(to_string(w.baseline))},
                         {"rank_sum", to_json(w.rank_sum)},
                         {"signed_rank", to_json(w.signed_rank)}});
    json j = {{"rows", rows}, {"wilcoxon", tests}};
    if (include_cells) {
        json cells = json::array();
        for (const auto& c : result.cells) cells.push_back(to_json(c));
        j["cells"] = cells;
    }
    return j;
}

ComparisonResult comparison_from_json(const json& j) {
    ComparisonResult out;
    try {
        if (const auto it = j.find("cells"); it != j.end())
            for (const auto& c : *it) out.cells.push_back(result_from_json(c));
        for (const auto& r : j.at("rows")) {
            ComparisonRow row;
            row.variety = r.at("variety").get<std::string>();
            row.algorithm = algorithm_from(r.at("algorithm"), "rows.algorithm");
            row.runs = r.at("runs").get<std::size_t>();
            row.assimilation = report_from_json(r.at("assimilation"));
            row.wofost = report_from_json(r.at("wofost"));
            row.rmse = summary_from_json(r.at("rmse"));
            row.mse = summary_from_json(r.at("mse"));
            out.rows.push_back(row);
        }
        for (const auto& w : j.at("wilcoxon")) {
            WilcoxonRow row;
            row.variety = w.at("variety").get<std::string>();
            row.baseline = algorithm_from(w.at("baseline"), "wilcoxon.baseline");
            row.rank_sum = test_from_json(w.at("rank_sum"));
            row.signed_rank = test_from_json(w.at("signed_rank"));
            out.wilcoxon.push_back(row);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("comparison: ") + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::string metrics_csv(std::span<const ExperimentResult> results) {
    std::ostringstream out;
    row(out, {"algorithm", "mode", "variety", "run", "seed", "stream_id", "assim_mse", "assim_mae",
              "assim_rmse", "assim_r", "wofost_mse", "wofost_mae", "wofost_rmse", "wofost_r", "best_tavg",
              "best_rain", "best_fitness", "evaluations"});
    for (const auto& r : results) {
        auto gene = [&](std::size_t i) { return i < r.best_genome.size() ? fmt(r.best_genome[i]) : ""; };
        row(out, {std::string(to_string(r.algorithm)), std::string(to_string(r.mode)), quote(r.variety),
                  std::to_string(r.run), std::to_string(r.seed), std::to_string(r.stream_id),
                  fmt(r.assimilation.mse), fmt(r.assimilation.mae), fmt(r.assimilation.rmse),
                  fmt(r.assimilation.correlation), fmt(r.wofost.mse), fmt(r.wofost.mae), fmt(r.wofost.rmse),
                  fmt(r.wofost.correlation), gene(0), gene(1), fmt(r.best_fitness),
                  std::to_string(r.evaluations)});
    }
    return out.str();
}

std::string convergence_csv(const ExperimentResult& result) {
    std::ostringstream out;
    row(out, {"generation", "best_fitness"});
    for (std::size_t g = 0; g < result.history.size(); ++g)
        row(out, {std::to_string(g + 1), fmt(result.history[g])});
    return out.str();
}

std::string trajectory_csv(const ExperimentResult& result) {
    std::ostringstream out;
    row(out, {"day", "simulated", "assimilated", "observed", "target"});
    const std::size_t days = result.target.size();
    auto at = [](const std::vector<double>& xs, std::size_t t) { return t < xs.size() ? fmt(xs[t]) : ""; };
    for (std::size_t t = 0; t < days; ++t) {
        const auto obs = t < result.observed.size() && result.observed[t] ? fmt(*result.observed[t]) : "";
        row(out, {std::to_string(t), at(result.simulated, t), at(result.assimilated, t), obs,
                  at(result.target, t)});
    }
    return out.str();
}

std::string comparison_csv(const ComparisonResult& result) {
    std::ostringstream out;
    row(out, {"variety", "algorithm", "runs", "assim_mse", "assim_mae", "assim_rmse", "assim_r", "wofost_mse",
              "wofost_mae", "wofost_rmse", "wofost_r", "rmse_mean", "rmse_median", "rmse_std", "mse_mean",
              "mse_median", "mse_std"});
    for (const auto& r : result.rows)
        row(out, {quote(r.variety), std::string(to_string(r.algorithm)), std::to_string(r.runs),
                  fmt(r.assimilation.mse), fmt(r.assimilation.mae), fmt(r.assimilation.rmse),
                  fmt(r.assimilation.correlation), fmt(r.wofost.mse), fmt(r.wofost.mae), fmt(r.wofost.rmse),
                  fmt(r.wofost.correlation), fmt(r.rmse.mean), fmt(r.rmse.median), fmt(r.rmse.std),
                  fmt(r.mse.mean), fmt(r.mse.median), fmt(r.mse.std)});
    return out.str();
}

std::string wilcoxon_csv(const ComparisonResult& result) {
    std::ostringstream out;
    row(out, {"variety", "baseline", "rank_sum_statistic", "rank_sum_p", "rank_sum_exact",
              "signed_rank_statistic", "signed_rank_p", "signed_rank_exact"});
    for (const auto& w : result.wilcoxon)
        row(out, {quote(w.variety), std::string(to_string(w.baseline)), fmt(w.rank_sum.statistic),
                  fmt(w.rank_sum.p_value), w.rank_sum.exact ? "true" : "false", fmt(w.signed_rank.statistic),
                  fmt(w.signed_rank.p_value), w.signed_rank.exact ? "true" : "false"});
    return out.str();
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string result_stem(const ExperimentResult& result) {
    return std::string(to_string(result.algorithm)) + "_" + slug(result.variety) + "_run" +
           std::to_string(result.run);
}

void write_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

json manifest(const ExperimentConfig& config, const std::vector<std::filesystem::path>& files) {
    json names = json::array();
    for (const auto& f : files) names.push_back(f.filename().string());
    return {{"seed", config.seed}, {"config", to_json(config)}, {"files", names}};
}

std::vector<std::filesystem::path> write_cell(const ExperimentResult& result, const ExperimentConfig& config,
                                              const std::filesystem::path& dir) {
    const auto stem = result_stem(result);
    std::vector<std::filesystem::path> paths;
    auto put = [&](const std::string& name, const std::string& text) {
        paths.push_back(dir / name);
        write_file(paths.back(), text);
    };
    put(stem + "_metrics.csv", metrics_csv(std::span(&result, 1)));
    json doc = {{"seed", config.seed}, {"config", to_json(config)}, {"result", to_json(result)}};
    put(stem + "_metrics.json", doc.dump(2) + "\n");
    put(stem + "_convergence.csv", convergence_csv(result));
    put(stem + "_trajectory.csv", trajectory_csv(result));
    return paths;
}

}  // namespace

std::vector<std::filesystem::path> export_result(const ExperimentResult& result, const ExperimentConfig& config,
                                                 const std::filesystem::path& dir) {
    ensure_dir(dir);
    auto paths = write_cell(result, config, dir);
    paths.push_back(dir / "manifest.json");
    write_file(paths.back(), manifest(config, paths).dump(2) + "\n");
    return paths;
}

std::vector<std::filesystem::path> export_comparison(const ComparisonResult& result,
                                                     const ExperimentConfig& config,
                                                     const std::filesystem::path& dir) {
    ensure_dir(dir);
    std::vector<std::filesystem::path> paths;
    for (const auto& cell : result.cells) {
        ExperimentConfig c = config;
        c.algorithm = cell.algorithm;
        if (!(c.inline_variety && c.inline_variety->name == cell.variety)) {
            c.variety = cell.variety;
            c.inline_variety.reset();
        }
        auto cell_paths = write_cell(cell, c, dir);
        paths.insert(paths.end(), cell_paths.begin(), cell_paths.end());
    }
    auto put = [&](const std::string& name, const std::string& text) {
        paths.push_back(dir / name);
        write_file(paths.back(), text);
    };
    put("comparison.csv", comparison_csv(result));
    put("wilcoxon.csv", wilcoxon_csv(result));
    json doc = to_json(result, true);
    doc["seed"] = config.seed;
    doc["config"] = to_json(config);
    put("comparison.json", doc.dump(2) + "\n");
    paths.push_back(dir / "manifest.json");
    write_file(paths.back(), manifest(config, paths).dump(2) + "\n");
    return paths;
}

}  // namespace cropcal::harness
