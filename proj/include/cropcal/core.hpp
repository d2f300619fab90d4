#pragma once

/// @file core.hpp
/// Shared domain types for the calibration toolkit: box bounds, candidate
/// solutions, populations, the seeded random stream and the objective type.

#include <cstdint>
#include <functional>
#include <random>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cropcal {

/// Invalid configuration (bad bounds, too-small population, unknown names).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runtime numerical failure (non-finite objective, diverging state).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Genome = std::vector<double>;

/// Axis-aligned search box. Construction validates lower <= upper.
class Bounds {
public:
    Bounds(std::vector<double> lower, std::vector<double> upper);

    std::size_t dimension() const noexcept { return lower_.size(); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    double width(std::size_t d) const { return upper_.at(d) - lower_.at(d); }
    bool contains(std::span<const double> genome) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

struct Solution {
    Genome genome;
    double fitness = std::numeric_limits<double>::infinity();
    bool evaluated = false;
};

struct Population {
    std::vector<Solution> members;
    int generation = 0;

    std::size_t size() const noexcept { return members.size(); }
};

/// Deterministic random stream identified by (seed, stream id).
///
/// Uniform and normal variates are produced from a 64-bit Mersenne Twister
/// with explicit conversions so draw sequences do not depend on the standard
/// library's distribution implementations.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Independent child stream; same (seed, stream id, child) -> same draws.
    RngStream derive(std::uint64_t child_id) const;

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal (Box-Muller, one cached spare).
    double normal();
    double normal(double mean, double stddev);
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer, used for seed and stream derivation.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a hash of a string, for stable stream ids derived from names.
std::uint64_t hash_name(std::string_view text) noexcept;

/// Objective to minimize. Must be deterministic for a given genome.
using Objective = std::function<double(std::span<const double>)>;

/// Per-generation callback: generation index (1-based) and the population
/// after selection.
using GenerationObserver = std::function<void(int, std::span<const Solution>)>;

/// Common result shape for every optimizer.
struct OptimizationResult {
    Solution best;
    /// Best-so-far fitness after each generation; length = generations run.
    std::vector<double> history;
    std::size_t evaluations = 0;
};

Population init_population(std::size_t np, const Bounds& bounds, RngStream& rng);

Genome clamp(std::span<const double> genome, const Bounds& bounds);

/// Evaluates `solution` in place; throws NumericalError on a non-finite value.
void evaluate(const Objective& objective, Solution& solution);

/// Index of the lowest-fitness member; first wins on ties.
std::size_t best_index(std::span<const Solution> members);

/// ceil(fraction * count) robust to representation error (0.3 * 10 -> 3).
std::size_t fraction_count(double fraction, std::size_t count);

}  // namespace cropcal
