#include <doctest.h>

#include <cmath>
#include <set>

#include "cropcal/core.hpp"

using namespace cropcal;

TEST_CASE("bounds reject inverted or empty intervals") {
    CHECK_THROWS_AS(Bounds({1.0}, {0.0}), ConfigError);
    CHECK_THROWS_AS(Bounds({}, {}), ConfigError);
    CHECK_THROWS_AS(Bounds({0.0, 0.0}, {1.0}), ConfigError);
    CHECK_NOTHROW(Bounds({5.0, 5.0}, {5.0, 5.0}));
}

TEST_CASE("init_population stays inside the variety box") {
    const Bounds bounds({20.0, 400.0}, {25.0, 600.0});
    RngStream rng(7);
    const auto pop = init_population(10, bounds, rng);
    REQUIRE(pop.size() == 10);
    CHECK(pop.generation == 0);
    for (const auto& m : pop.members) {
        CHECK(bounds.contains(m.genome));
        CHECK_FALSE(m.evaluated);
    }
}

TEST_CASE("init_population on a degenerate interval") {
    const Bounds bounds({5.0, 5.0}, {5.0, 5.0});
    RngStream rng(1);
    for (const auto& m : init_population(6, bounds, rng).members) CHECK(m.genome == Genome{5.0, 5.0});
}

TEST_CASE("init_population rejects np < 4") {
    RngStream rng(1);
    CHECK_THROWS_AS(init_population(3, Bounds({0.0}, {1.0}), rng), ConfigError);
}

TEST_CASE("init_population is reproducible") {
    const Bounds bounds({-1.0, 0.0}, {1.0, 10.0});
    RngStream a(42, 3), b(42, 3);
    const auto pa = init_population(1000, bounds, a);
    const auto pb = init_population(1000, bounds, b);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa.members[i].genome == pb.members[i].genome);
}

TEST_CASE("init_population coordinates look uniform") {
    const Bounds bounds({20.0, 400.0}, {25.0, 600.0});
    RngStream rng(2024);
    const std::size_t n = 10000;
    const auto pop = init_population(n, bounds, rng);
    for (std::size_t d = 0; d < 2; ++d) {
        double sum = 0.0;
        for (const auto& m : pop.members) sum += m.genome[d];
        const double mean = sum / n;
        const double mid = 0.5 * (bounds.lower()[d] + bounds.upper()[d]);
        const double se = bounds.width(d) / std::sqrt(12.0 * n);
        CHECK(std::abs(mean - mid) < 5.0 * se);
    }
}

TEST_CASE("clamp projects onto the box") {
    const Bounds b({20.0, 400.0}, {25.0, 600.0});
    CHECK(clamp(Genome{26.0, 700.0}, b) == Genome{25.0, 600.0});
    CHECK(clamp(Genome{22.0, 500.0}, b) == Genome{22.0, 500.0});
    CHECK(clamp(Genome{-3.0, 100.0}, Bounds({0.0, 200.0}, {10.0, 300.0})) == Genome{0.0, 200.0});
    CHECK_THROWS_AS(clamp(Genome{1.0}, b), std::invalid_argument);
}

TEST_CASE("rng streams: same id repeats, different ids diverge") {
    RngStream a(9, 1), b(9, 1), c(9, 2), d(10, 1);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        same_c += x == c.uniform();
        same_d += x == d.uniform();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);

    const RngStream root(5, 0);
    RngStream k1 = root.derive(1), k1b = root.derive(1), k2 = root.derive(2);
    CHECK(k1.uniform() == k1b.uniform());
    CHECK(k1.uniform() != k2.uniform());
}

TEST_CASE("rng draws have the advertised ranges and moments") {
    RngStream rng(123);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    std::set<std::size_t> seen;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
        const auto k = rng.index(7);
        REQUIRE(k < 7);
        seen.insert(k);
    }
    CHECK(seen.size() == 7);
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK_THROWS(rng.index(0));
}

TEST_CASE("evaluate rejects non-finite objectives") {
    Solution s{{1.0, 2.0}};
    evaluate([](std::span<const double> g) { return g[0] + g[1]; }, s);
    CHECK(s.evaluated);
    CHECK(s.fitness == 3.0);
    Solution bad{{0.0}};
    CHECK_THROWS_AS(evaluate([](std::span<const double>) { return std::nan(""); }, bad), NumericalError);
}

TEST_CASE("best_index prefers the first of tied members") {
    std::vector<Solution> members(4);
    for (std::size_t i = 0; i < 4; ++i) members[i].fitness = i == 0 ? 3.0 : 1.0;
    CHECK(best_index(members) == 1);
}

TEST_CASE("fraction_count is a ceiling robust to representation error") {
    CHECK(fraction_count(0.3, 10) == 3);
    CHECK(fraction_count(0.1, 4) == 1);
    CHECK(fraction_count(0.1, 10) == 1);
    CHECK(fraction_count(0.0, 10) == 0);
    CHECK(fraction_count(0.5, 3) == 2);
    CHECK(fraction_count(1.0, 7) == 7);
}
