// Command-line front end for the calibration toolkit.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cropcal/harness.hpp"

namespace fs = std::filesystem;
using namespace cropcal;
using namespace cropcal::harness;

namespace {

enum Exit { ok = 0, config_error = 1, runtime_error = 2, check_failed = 3 };

struct Common {
    std::string config_path;
    std::string algorithm;
    std::string variety;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--algorithm", c.algorithm, "demmogc, de, ga, pso or hho");
    app->add_option("--variety", c.variety, "variety preset name, e.g. IR64");
    app->add_option("--runs", c.runs, "number of seeded runs");
    app->add_option("--seed", c.seed, "root seed");
    app->add_option("--mode", c.mode, "assimilation or wofost-only");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
}

// File values first, then flags.
ExperimentConfig resolve(const Common& c) {
    ExperimentConfig config = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (!c.algorithm.empty()) {
        const auto a = parse_algorithm(c.algorithm);
        if (!a) throw ConfigError("unknown algorithm \"" + c.algorithm + "\"");
        config.algorithm = *a;
    }
    if (!c.variety.empty()) {
        config.variety = c.variety;
        config.inline_variety.reset();
    }
    if (c.runs) config.runs = *c.runs;
    if (c.seed) config.seed = *c.seed;
    if (!c.mode.empty()) {
        const auto m = parse_mode(c.mode);
        if (!m) throw ConfigError("unknown mode \"" + c.mode + "\"");
        config.mode = *m;
    }
    if (!c.out.empty()) config.output_dir = c.out;
    return config;
}

// Target, observations and ensemble noise for run 0, as used by calibrate.
struct SeasonData {
    wofost::CropVariety variety;
    wofost::Trajectory target;
    enkf::ObservationSeries observations;
    RngStream ensemble_rng;
};

SeasonData season_data(const ExperimentConfig& config) {
    const auto variety = config.resolve_variety();
    const RngStream data(config.seed, data_stream_id(variety.name, 0));
    RngStream target_rng = data.derive(1);
    RngStream obs_rng = data.derive(2);
    const double tavg = config.target.tavg.value_or(variety.weather.tavg_mid());
    const double rain = config.target.rain.value_or(variety.weather.rain_mid());
    const auto weather = wofost::jittered_weather(variety, tavg, rain, config.simulation.days,
                                                  config.target.jitter, target_rng);
    auto target = wofost::simulate_season(variety, weather, config.simulation);
    auto observations = enkf::build_observations(target, config.enkf, obs_rng);
    return {variety, std::move(target), std::move(observations), data.derive(3)};
}

void emit(const std::string& text, const Common& c, const std::string& file) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(c.out);
    write_file(fs::path(c.out) / file, text);
    std::cout << (fs::path(c.out) / file).string() << "\n";
}

int run_trajectory(const Common& c, std::optional<double> tavg, std::optional<double> rain, bool assimilate) {
    ExperimentConfig config = resolve(c);
    config.validate();
    const auto data = season_data(config);
    const double t = tavg.value_or(data.variety.weather.tavg_mid());
    const double r = rain.value_or(data.variety.weather.rain_mid());
    const auto weather = wofost::constant_weather(data.variety, t, r, config.simulation.days);

    ExperimentResult result;
    result.algorithm = config.algorithm;
    result.mode = assimilate ? Mode::assimilation : Mode::wofost_only;
    result.variety = data.variety.name;
    result.seed = config.seed;
    result.best_genome = {t, r};
    result.target = data.target;
    if (assimilate) {
        RngStream rng = data.ensemble_rng;
        auto season = enkf::assimilate_season(data.variety, weather, data.observations, config.enkf, rng,
                                              config.simulation);
        result.simulated = std::move(season.simulated);
        result.assimilated = std::move(season.assimilated);
        result.observed = data.observations.values;
        result.assimilation = metrics::report(result.target, result.assimilated);
    } else {
        result.simulated = wofost::simulate_season(data.variety, weather, config.simulation);
    }
    result.wofost = metrics::report(result.target, result.simulated);

    const std::string name = assimilate ? "assimilate" : "simulate";
    if (c.format == "json") {
        nlohmann::json doc = {{"seed", config.seed}, {"config", to_json(config)}, {"result", to_json(result)}};
        emit(doc.dump(2) + "\n", c, name + ".json");
    } else {
        emit(trajectory_csv(result), c, name + ".csv");
    }
    return ok;
}

int run_calibrate(const Common& c) {
    const ExperimentConfig config = resolve(c);
    config.validate();
    std::vector<ExperimentResult> results;
    for (int run = 0; run < config.runs; ++run) {
        results.push_back(calibrate(config, run));
        std::fprintf(stderr, "run %d: assimilation MSE %.6g, WOFOST MSE %.6g, TAVG %.4f, RAIN %.2f (%.2fs)\n",
                     run, results.back().assimilation.mse, results.back().wofost.mse,
                     results.back().best_genome[0], results.back().best_genome[1], results.back().wall_seconds);
        export_result(results.back(), config, config.output_dir);
    }
    if (c.format == "json") {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& r : results) doc.push_back(to_json(r));
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << metrics_csv(results);
    }
    return ok;
}

int run_compare(const Common& c, std::vector<std::string> algorithms, std::vector<std::string> varieties,
                bool stats, unsigned jobs) {
    ExperimentConfig config = resolve(c);
    if (stats && !c.runs) config.runs = 30;
    ComparisonPlan plan;
    plan.jobs = jobs;
    if (algorithms.empty() || (algorithms.size() == 1 && algorithms[0] == "all")) {
        plan.algorithms = all_algorithms();
    } else {
        for (const auto& name : algorithms) {
            const auto a = parse_algorithm(name);
            if (!a) throw ConfigError("unknown algorithm \"" + name + "\"");
            plan.algorithms.push_back(*a);
        }
    }
    if (varieties.size() == 1 && varieties[0] == "all") {
        for (const auto& v : wofost::variety_presets()) plan.varieties.push_back(v.name);
    } else if (varieties.empty()) {
        plan.varieties.push_back(config.resolve_variety().name);
    } else {
        plan.varieties = std::move(varieties);
    }
    const auto result = compare(config, plan);
    export_comparison(result, config, config.output_dir);
    if (c.format == "json") {
        std::cout << to_json(result, false).dump(2) << "\n";
    } else {
        std::cout << comparison_csv(result);
        if (!result.wilcoxon.empty()) std::cout << "\n" << wilcoxon_csv(result);
    }
    return ok;
}

ComparisonResult load_cells(const fs::path& input) {
    auto read_json = [](const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open " + p.string());
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(p.string() + ": " + e.what());
        }
    };
    ComparisonResult result;
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(input)) {
            const auto name = entry.path().filename().string();
            if (name.size() > 13 && name.ends_with("_metrics.json")) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) result.cells.push_back(result_from_json(read_json(f).at("result")));
    } else {
        const auto doc = read_json(input);
        if (doc.contains("cells"))
            result = comparison_from_json(doc);
        else if (doc.contains("result"))
            result.cells.push_back(result_from_json(doc.at("result")));
        else
            throw ConfigError(input.string() + ": no stored results");
    }
    if (result.cells.empty()) throw ConfigError(input.string() + ": no stored results");
    return result;
}

int run_stats(const Common& c, const std::string& input) {
    auto result = load_cells(input);
    summarize(result);
    if (c.format == "json") {
        emit(to_json(result, false).dump(2) + "\n", c, "stats.json");
    } else {
        std::string text = comparison_csv(result);
        if (!result.wilcoxon.empty()) text += "\n" + wilcoxon_csv(result);
        emit(text, c, "stats.csv");
    }
    return ok;
}

int run_appendix(const Common& c, std::optional<double> tolerance, std::optional<double> gain) {
    AppendixFixture fixture;
    fixture.gain_override = gain;
    const auto report = appendix_check(fixture, tolerance ? AppendixTolerances::uniform(*tolerance)
                                                          : AppendixTolerances{});
    if (c.format == "json") {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& e : report.entries)
            doc.push_back({{"name", e.name},
                           {"expected", e.expected},
                           {"actual", e.actual},
                           {"tolerance", e.tolerance},
                           {"passed", e.passed}});
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const auto& e : report.entries)
            std::printf("%-16s %s  expected %s  actual %s  tol %g\n", e.name.c_str(),
                        e.passed ? "PASS" : "FAIL", e.expected.c_str(), e.actual.c_str(), e.tolerance);
    }
    return report.all_passed() ? ok : check_failed;
}

int run_presets(const Common& c) {
    const auto presets = wofost::variety_presets();
    if (c.format == "json") {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& v : presets) doc.push_back(to_json(v));
        std::cout << doc.dump(2) << "\n";
        return ok;
    }
    std::printf("name,crop,lai_max,rgrlai,tbase,fc,wp,bd,tavg_low,tavg_high,rain_low,rain_high\r\n");
    for (const auto& v : presets)
        std::printf("\"%s\",%s,%g,%g,%g,%g,%g,%g,%g,%g,%g,%g\r\n", v.name.c_str(), v.crop.c_str(),
                    v.crop_params.lai_max, v.crop_params.rgrlai, v.crop_params.tbase, v.soil.fc, v.soil.wp,
                    v.soil.bd, v.weather.tavg_low, v.weather.tavg_high, v.weather.rain_low,
                    v.weather.rain_high);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crop-model calibration with DE-MMOGC, baselines and EnKF assimilation"};
    app.require_subcommand(1);
    Common common;

    auto* simulate = app.add_subcommand("simulate", "free-running WOFOST trajectory");
    auto* assimilate = app.add_subcommand("assimilate", "EnKF-assimilated trajectory");
    std::optional<double> tavg, rain;
    for (auto* sub : {simulate, assimilate}) {
        add_common(sub, common);
        sub->add_option("--tavg", tavg, "season TAVG, deg C (default: range midpoint)");
        sub->add_option("--rain", rain, "season RAIN total, mm (default: range midpoint)");
    }

    auto* cal = app.add_subcommand("calibrate", "calibrate TAVG and RAIN for one variety");
    add_common(cal, common);

    auto* cmp = app.add_subcommand("compare", "algorithm x variety comparison matrix");
    add_common(cmp, common);
    std::vector<std::string> algorithms, varieties;
    bool stats_flag = false;
    unsigned jobs = 0;
    cmp->add_option("--algorithms", algorithms, "algorithms to compare (default: all)")->delimiter(',');
    cmp->add_option("--varieties", varieties, "varieties, or 'all' for every preset")->delimiter(',');
    cmp->add_flag("--stats", stats_flag, "statistics run: 30 runs unless --runs is given");
    cmp->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");

    auto* stats = app.add_subcommand("stats", "summaries and Wilcoxon tests from stored results");
    add_common(stats, common);
    std::string input;
    stats->add_option("input", input, "comparison.json, a *_metrics.json file or a results directory")
        ->required();

    auto* appendix = app.add_subcommand("appendix-check", "EnKF worked-example check");
    add_common(appendix, common);
    std::optional<double> tolerance, gain;
    appendix->add_option("--tolerance", tolerance, "one tolerance for every assertion");
    appendix->add_option("--gain", gain, "gain used in the update step instead of the computed one");

    auto* presets = app.add_subcommand("presets", "list embedded crop varieties");
    add_common(presets, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*simulate) return run_trajectory(common, tavg, rain, false);
        if (*assimilate) return run_trajectory(common, tavg, rain, true);
        if (*cal) return run_calibrate(common);
        if (*cmp) return run_compare(common, algorithms, varieties, stats_flag, jobs);
        if (*stats) return run_stats(common, input);
        if (*appendix) return run_appendix(common, tolerance, gain);
        if (*presets) return run_presets(common);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime_error;
    }
    return ok;
}
