#pragma once

/// @file mutation.hpp
/// The classic DE mutation catalog, binomial crossover and p-best selection.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cropcal/core.hpp"

namespace cropcal::mutation {

enum class Strategy {
    rand_1,
    current_1,
    best_1,
    rand_2,
    best_2,
    current_to_best_1,
    current_to_rand_1,
    current_to_pbest_1,
};

std::string_view to_string(Strategy s) noexcept;
/// Accepts "rand/1", "best/1", "current-to-pbest/1", ... (the DE/ prefix is optional).
std::optional<Strategy> parse_strategy(std::string_view text);

/// Number of distinct random parents (excluding the target) a strategy draws.
std::size_t parent_count(Strategy s) noexcept;

/// current-to-rand/1 is used without crossover.
bool uses_crossover(Strategy s) noexcept;

struct MutationContext {
    /// Whole population; random parents are drawn from it.
    std::span<const Solution> population;
    /// X_best for the best-based strategies.
    std::span<const double> best;
    /// Historical archive for current-to-pbest/1.
    std::span<const Solution> pbest_archive;
    double pbest_fraction = 0.30;
    double F = 0.5;
    std::size_t target_index = 0;
};

/// Draws `count` distinct indices from [0, population_size) excluding `exclude`.
std::vector<std::size_t> sample_parents(std::size_t population_size, std::size_t exclude,
                                        std::size_t count, RngStream& rng);

/// Mutant from explicit parent indices and (for current-to-pbest/1) an explicit
/// p-best vector, before clamping.
Genome mutate_raw(Strategy strategy, const MutationContext& ctx,
                  std::span<const std::size_t> parents, std::span<const double> pbest = {});

/// Samples parents (and a p-best member when needed), applies the strategy and
/// clamps the mutant into `bounds`.
Genome mutate(Strategy strategy, const MutationContext& ctx, const Bounds& bounds, RngStream& rng);

/// Binomial crossover with one forced mutant coordinate.
Genome binomial_crossover(std::span<const double> target, std::span<const double> mutant,
                          double Cr, RngStream& rng);

/// Uniform pick among the best ceil(p * |archive|) archive members.
const Solution& select_pbest(std::span<const Solution> archive, double p, RngStream& rng);

/// Bounded FIFO archive of past parent solutions.
class Archive {
public:
    explicit Archive(std::size_t capacity) : capacity_(capacity) {}

    void add(std::span<const Solution> solutions);
    std::span<const Solution> members() const noexcept { return members_; }
    std::size_t capacity() const noexcept { return capacity_; }

private:
    std::size_t capacity_;
    std::vector<Solution> members_;
};

}  // namespace cropcal::mutation
