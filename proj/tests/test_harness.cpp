#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cropcal/harness.hpp"

using namespace cropcal;
using namespace cropcal::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(Algorithm a = Algorithm::demmogc, const std::string& variety = "IR64 (Lowland)") {
    ExperimentConfig c;
    c.algorithm = a;
    c.variety = variety;
    c.demmogc.generations = 5;
    c.de.generations = 5;
    c.ga.generations = 5;
    c.pso.iterations = 5;
    c.hho.iterations = 5;
    c.seed = 7;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("cropcal_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("algorithm and mode names") {
    for (auto a : all_algorithms()) CHECK(parse_algorithm(to_string(a)) == a);
    CHECK(parse_algorithm("DE-MMOGC") == Algorithm::demmogc);
    CHECK(parse_algorithm("PSO") == Algorithm::pso);
    CHECK_FALSE(parse_algorithm("sa").has_value());
    CHECK(parse_mode("assimilation") == Mode::assimilation);
    CHECK(parse_mode("wofost-only") == Mode::wofost_only);
    CHECK_FALSE(parse_mode("both").has_value());
}

TEST_CASE("config round-trips through JSON") {
    ExperimentConfig c = small_config(Algorithm::hho, "HD-2967");
    c.mode = Mode::wofost_only;
    c.runs = 3;
    c.target.tavg = 21.0;
    c.bounds_lower = std::vector<double>{18, 300};
    c.bounds_upper = std::vector<double>{26, 700};
    c.enkf.degrade_mode = enkf::DegradeMode::noisy;
    c.demmogc.unified_strategy = mutation::Strategy::rand_1;
    c.hho.energy_override = 0.25;
    const auto j = to_json(c);
    const auto back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.algorithm == Algorithm::hho);
    CHECK(back.runs == 3);
    CHECK(back.search_bounds().upper()[1] == 700);
}

TEST_CASE("config parsing rejects bad input") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"colour", "red"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"de", {{"npp", 4}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"algorithm", "anneal"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"runs", "many"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);

    auto c = small_config(Algorithm::demmogc, "Basmati");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(calibrate(c), ConfigError);
    c = small_config();
    c.runs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.bounds_lower = std::vector<double>{30, 100};
    c.bounds_upper = std::vector<double>{20, 200};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.de.np = 2;
    c.algorithm = Algorithm::de;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("inline varieties and config files") {
    const auto dir = scratch("config");
    fs::create_directories(dir);
    const auto path = dir / "cfg.json";
    std::ofstream(path) << R"({"variety": {"base": "HD-2967", "name": "HD-2967 late", "crop_params": {"rgrlai": 0.03}},
                               "algorithm": "pso", "runs": 2})";
    const auto c = load_config(path);
    CHECK(c.algorithm == Algorithm::pso);
    CHECK(c.runs == 2);
    const auto v = c.resolve_variety();
    CHECK(v.name == "HD-2967 late");
    CHECK(v.crop_params.rgrlai == 0.03);
    CHECK(v.crop_params.lai_max == wofost::find_preset("HD-2967")->crop_params.lai_max);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("calibration produces consistent metrics") {
    const auto c = small_config(Algorithm::demmogc, "HD-2967");
    const auto r = calibrate(c);
    CHECK(r.variety == "HD-2967 (Irrigated)");
    CHECK(r.history.size() == 5);
    CHECK(r.target.size() == 120);
    CHECK(r.assimilated.size() == 120);
    CHECK(r.simulated.size() == 120);
    CHECK(c.search_bounds().contains(r.best_genome));
    // The objective in assimilation mode is the assimilated MSE at the best genome.
    CHECK(r.best_fitness == doctest::Approx(r.assimilation.mse).epsilon(1e-12));
    for (std::size_t g = 1; g < r.history.size(); ++g) CHECK(r.history[g] <= r.history[g - 1]);
}

TEST_CASE("collapsed bounds pin the calibrated point") {
    auto c = small_config(Algorithm::ga);
    c.mode = Mode::wofost_only;
    c.bounds_lower = std::vector<double>{24.0, 900.0};
    c.bounds_upper = std::vector<double>{24.0, 900.0};
    const auto r = calibrate(c);
    CHECK(r.best_genome == Genome{24.0, 900.0});
    CHECK(r.best_fitness == doctest::Approx(r.wofost.mse).epsilon(1e-12));
}

TEST_CASE("calibration is deterministic per seed and stream") {
    for (auto a : all_algorithms()) {
        CAPTURE(to_string(a));
        const auto c = small_config(a);
        CHECK(same_outcome(calibrate(c, 1), calibrate(c, 1)));
    }
    const auto c = small_config();
    CHECK_FALSE(same_outcome(calibrate(c, 0), calibrate(c, 1)));
}

TEST_CASE("stream ids are distinct across cells") {
    std::set<std::uint64_t> ids;
    std::size_t cells = 0;
    for (auto a : all_algorithms())
        for (const auto& v : wofost::variety_presets())
            for (int run = 0; run < 30; ++run, ++cells) ids.insert(optimizer_stream_id(a, v.name, run));
    CHECK(ids.size() == cells);
    CHECK(optimizer_stream_id(Algorithm::de, "IR64 (Lowland)", 0) == optimizer_stream_id(Algorithm::de, "ir64 (lowland)", 0));
    CHECK(data_stream_id("HD-2967", 0) != data_stream_id("HD-2967", 1));
}

TEST_CASE("comparison matrix") {
    auto base = small_config();
    base.runs = 2;
    ComparisonPlan plan{{Algorithm::demmogc, Algorithm::de, Algorithm::pso}, {"IR64 (Lowland)", "HD-2967"}, 1};
    const auto result = compare(base, plan);
    CHECK(result.cells.size() == 2 * 3 * 2);
    CHECK(result.rows.size() == 6);
    CHECK(result.wilcoxon.size() == 4);
    for (const auto& row : result.rows) {
        CHECK(row.runs == 2);
        CHECK(row.rmse.count == 2);
    }
    for (const auto& w : result.wilcoxon) CHECK(w.baseline != Algorithm::demmogc);

    // Cells share the data stream per (variety, run) across algorithms.
    CHECK(result.cells[0].target == result.cells[2].target);

    const auto again = compare(base, plan);
    REQUIRE(again.cells.size() == result.cells.size());
    for (std::size_t i = 0; i < result.cells.size(); ++i) CHECK(same_outcome(result.cells[i], again.cells[i]));
    CHECK(comparison_csv(result) == comparison_csv(again));
    CHECK(wilcoxon_csv(result) == wilcoxon_csv(again));

    // Thread count does not change the outcome.
    plan.jobs = 3;
    CHECK(comparison_csv(compare(base, plan)) == comparison_csv(result));
}

TEST_CASE("a single-cell comparison has one row and no tests") {
    const auto result = compare(small_config(Algorithm::hho), {{Algorithm::hho}, {"BT Cotton"}, 1});
    CHECK(result.cells.size() == 1);
    CHECK(result.rows.size() == 1);
    CHECK(result.wilcoxon.empty());
    CHECK_THROWS_AS(compare(small_config(), {{}, {"HD-2967"}, 1}), ConfigError);
    CHECK_THROWS_AS(compare(small_config(), {{Algorithm::de}, {"Nowhere"}, 1}), ConfigError);
}

TEST_CASE("worked-example check") {
    const auto ok = appendix_check();
    CHECK(ok.all_passed());
    for (const char* name : {"mean", "covariance", "gain", "updated_ensemble", "updated_mean"})
        CHECK(ok.find(name) != nullptr);

    AppendixFixture wrong_gain;
    wrong_gain.gain_override = 0.5;
    const auto bad = appendix_check(wrong_gain);
    CHECK_FALSE(bad.all_passed());
    CHECK_FALSE(bad.find("updated_ensemble")->passed);
    CHECK(bad.find("mean")->passed);
    CHECK(bad.find("covariance")->passed);
    CHECK(bad.find("gain")->passed);

    const auto tight = appendix_check({}, AppendixTolerances::uniform(1e-9));
    CHECK(tight.find("mean")->passed);
    CHECK(tight.find("covariance")->passed);
    CHECK_FALSE(tight.find("gain")->passed);
    CHECK_FALSE(tight.find("updated_ensemble")->passed);
    CHECK_FALSE(tight.find("updated_mean")->passed);
}

TEST_CASE("result export") {
    const auto dir = scratch("export");
    auto c = small_config(Algorithm::de, "IR64 (Lowland)");
    const auto r = calibrate(c);
    const auto files = export_result(r, c, dir);
    CHECK(files.size() == 5);
    for (const auto& f : files) CHECK(fs::exists(f));

    const auto stem = result_stem(r);
    CHECK(stem == "de_ir64-lowland_run0");

    const auto traj = lines(slurp(dir / (stem + "_trajectory.csv")));
    CHECK(traj.size() == std::size_t(c.simulation.days) + 1);
    CHECK(traj[0] == "day,simulated,assimilated,observed,target");

    const auto conv = lines(slurp(dir / (stem + "_convergence.csv")));
    REQUIRE(conv.size() == 6);
    double prev = INFINITY;
    for (std::size_t i = 1; i < conv.size(); ++i) {
        const double v = std::stod(conv[i].substr(conv[i].find(',') + 1));
        CHECK(v <= prev);
        prev = v;
    }

    const auto metrics = lines(slurp(dir / (stem + "_metrics.csv")));
    REQUIRE(metrics.size() == 2);
    CHECK(metrics[0].rfind("algorithm,mode,variety,run,seed", 0) == 0);

    const auto doc = nlohmann::json::parse(slurp(dir / (stem + "_metrics.json")));
    CHECK(doc.at("seed") == c.seed);
    CHECK(config_from_json(doc.at("config")).algorithm == Algorithm::de);
    CHECK(same_outcome(result_from_json(doc.at("result")), r));

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("seed") == c.seed);
    CHECK(manifest.at("config") == to_json(c));
    fs::remove_all(dir);
}

TEST_CASE("comparison export round-trips") {
    const auto dir = scratch("compare");
    auto c = small_config();
    c.runs = 2;
    const auto result = compare(c, {{Algorithm::demmogc, Algorithm::ga}, {"HD-2967"}, 1});
    export_comparison(result, c, dir);
    for (const char* name : {"comparison.csv", "wilcoxon.csv", "comparison.json", "manifest.json"})
        CHECK(fs::exists(dir / name));
    const auto doc = nlohmann::json::parse(slurp(dir / "comparison.json"));
    const auto back = comparison_from_json(doc);
    REQUIRE(back.cells.size() == result.cells.size());
    for (std::size_t i = 0; i < back.cells.size(); ++i) CHECK(same_outcome(back.cells[i], result.cells[i]));
    CHECK(comparison_csv(back) == comparison_csv(result));
    CHECK(wilcoxon_csv(back) == wilcoxon_csv(result));
    CHECK(lines(slurp(dir / "comparison.csv")).size() == 3);
    fs::remove_all(dir);
}

TEST_CASE("csv quoting and unwritable paths") {
    ExperimentResult r;
    r.variety = "Odd, \"quoted\" name";
    r.history = {1.0};
    const auto text = metrics_csv(std::span(&r, 1));
    CHECK(text.find("\"Odd, \"\"quoted\"\" name\"") != std::string::npos);
    CHECK_THROWS(write_file("/proc/definitely/not/here.csv", "x"));
}
