#pragma once

/// @file demmogc.hpp
/// Multi-mutation differential evolution with elite communication between
/// subpopulations and success-driven operator selection.
///
/// The population is split into three contiguous subpopulations, each bound
/// to one mutation operator (current-to-best/1, rand-to-best/2,
/// current-to-pbest/1). Random parents are drawn from the whole population.
/// After greedy selection the best k-fraction of every subpopulation forms an
/// elite pool; the worst members of each subpopulation are overwritten by
/// elites migrated from the other subpopulations, and the next generation's
/// x_best is drawn from that pool. Subpopulation sizes are then re-apportioned
/// from each operator's success count.

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cropcal/core.hpp"
#include "cropcal/mutation.hpp"

namespace cropcal::demmogc {

enum class Operator { current_to_best_1, rand_to_best_2, current_to_pbest_1 };

inline constexpr std::size_t kOperatorCount = 3;
inline constexpr std::size_t kMinSubpopulation = 2;

std::string_view to_string(Operator op) noexcept;

struct SubpopulationPlan {
    std::array<Operator, kOperatorCount> operators{Operator::current_to_best_1,
                                                   Operator::rand_to_best_2,
                                                   Operator::current_to_pbest_1};
    std::array<std::size_t, kOperatorCount> sizes{};
};

struct OperatorStats {
    std::array<std::size_t, kOperatorCount> successes{};
    std::array<double, kOperatorCount> probabilities{1.0 / 3, 1.0 / 3, 1.0 / 3};
};

struct Config {
    std::size_t np = 10;
    int generations = 50;
    double F = 0.6;
    double Cr = 0.9;
    double pbest_fraction = 0.30;
    /// Elite fraction k kept from each subpopulation; 0 disables communication.
    double elite_fraction = 0.10;
    /// Archive capacity as a multiple of np.
    std::size_t archive_factor = 10;
    /// Forces every subpopulation onto one catalog strategy (canonical-DE check).
    std::optional<mutation::Strategy> unified_strategy;

    void validate() const;
};

/// v = x_r1 + F(x_best - x_r1) + F(x_r2 - x_r3) + F(x_r1 - x_r2), unclamped.
Genome rand_to_best_2_raw(std::span<const double> r1, std::span<const double> r2,
                          std::span<const double> r3, std::span<const double> best, double F);

/// Samples three distinct parents (excluding the target) and applies rand-to-best/2.
Genome rand_to_best_2(const mutation::MutationContext& ctx, const Bounds& bounds,
                      RngStream& rng);

/// Sizes as equal as possible, earlier subpopulations taking the remainder.
std::array<std::size_t, kOperatorCount> initial_sizes(std::size_t np);

/// Success counts -> probabilities with add-one smoothing.
OperatorStats adapt_operator_probabilities(const OperatorStats& stats);

/// Largest-remainder apportionment of np by probability, each size >= floor.
std::array<std::size_t, kOperatorCount> apportion_sizes(
    const std::array<double, kOperatorCount>& probabilities, std::size_t np,
    std::size_t floor = kMinSubpopulation);

struct CommunicationResult {
    std::array<std::vector<Solution>, kOperatorCount> subpopulations;
    std::vector<Solution> elite_pool;
};

/// Elite migration between evaluated subpopulations.
CommunicationResult communicate(const std::array<std::vector<Solution>, kOperatorCount>& subpops,
                                double elite_fraction, RngStream& rng);

struct GenerationTrace {
    SubpopulationPlan plan;
    OperatorStats stats;
};

struct Result : OptimizationResult {
    /// Plan used and stats observed in each generation.
    std::vector<GenerationTrace> trace;
};

Result optimize(const Objective& objective, const Bounds& bounds, const Config& config,
                RngStream& rng, const GenerationObserver& observer = {});

}  // namespace cropcal::demmogc
