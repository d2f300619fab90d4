#include "cropcal/demmogc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cropcal::demmogc {

std::string_view to_string(Operator op) noexcept {
    switch (op) {
    case Operator::current_to_best_1: return "current-to-best/1";
    case Operator::rand_to_best_2: return "rand-to-best/2";
    case Operator::current_to_pbest_1: return "current-to-pbest/1";
    }
    return "?";
}

void Config::validate() const {
    if (np < kOperatorCount * kMinSubpopulation)
        throw ConfigError("demmogc: np must be at least 6 (three subpopulations of two)");
    if (generations < 0) throw ConfigError("demmogc: generations must be non-negative");
    if (!(F > 0.0) || !std::isfinite(F)) throw ConfigError("demmogc: F must be positive");
    if (!(Cr >= 0.0 && Cr <= 1.0)) throw ConfigError("demmogc: Cr must lie in [0, 1]");
    if (!(pbest_fraction > 0.0 && pbest_fraction <= 1.0))
        throw ConfigError("demmogc: p-best fraction must lie in (0, 1]");
    if (!(elite_fraction >= 0.0 && elite_fraction <= 0.5))
        throw ConfigError("demmogc: elite fraction must lie in [0, 0.5]");
    if (archive_factor == 0) throw ConfigError("demmogc: archive factor must be positive");
}

Genome rand_to_best_2_raw(std::span<const double> r1, std::span<const double> r2,
                          std::span<const double> r3, std::span<const double> best, double F) {
    const std::size_t dim = r1.size();
    if (r2.size() != dim || r3.size() != dim || best.size() != dim)
        throw std::invalid_argument("rand_to_best_2: vectors differ in dimension");
    Genome v(dim);
    for (std::size_t d = 0; d < dim; ++d)
        v[d] = r1[d] + F * (best[d] - r1[d]) + F * (r2[d] - r3[d]) + F * (r1[d] - r2[d]);
    return v;
}

Genome rand_to_best_2(const mutation::MutationContext& ctx, const Bounds& bounds,
                      RngStream& rng) {
    const auto parents = mutation::sample_parents(ctx.population.size(), ctx.target_index, 3, rng);
    return clamp(rand_to_best_2_raw(ctx.population[parents[0]].genome,
                                    ctx.population[parents[1]].genome,
                                    ctx.population[parents[2]].genome, ctx.best, ctx.F),
                 bounds);
}

std::array<std::size_t, kOperatorCount> initial_sizes(std::size_t np) {
    std::array<std::size_t, kOperatorCount> sizes{};
    for (std::size_t s = 0; s < kOperatorCount; ++s)
        sizes[s] = np / kOperatorCount + (s < np % kOperatorCount ? 1 : 0);
    return sizes;
}

OperatorStats adapt_operator_probabilities(const OperatorStats& stats) {
    OperatorStats out = stats;
    double total = 0.0;
    for (std::size_t s = 0; s < kOperatorCount; ++s) total += stats.successes[s] + 1.0;
    for (std::size_t s = 0; s < kOperatorCount; ++s)
        out.probabilities[s] = (stats.successes[s] + 1.0) / total;
    return out;
}

std::array<std::size_t, kOperatorCount> apportion_sizes(
    const std::array<double, kOperatorCount>& probabilities, std::size_t np, std::size_t floor) {
    if (np < floor * kOperatorCount)
        throw ConfigError("apportion_sizes: np too small for the per-subpopulation floor");
    std::array<std::size_t, kOperatorCount> sizes{};
    std::array<double, kOperatorCount> remainder{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < kOperatorCount; ++s) {
        const double quota = probabilities[s] * static_cast<double>(np);
        sizes[s] = static_cast<std::size_t>(std::floor(quota));
        remainder[s] = quota - static_cast<double>(sizes[s]);
        assigned += sizes[s];
    }
    std::array<std::size_t, kOperatorCount> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < np; k = (k + 1) % kOperatorCount, ++assigned)
        ++sizes[order[k]];
    while (assigned > np) {  // only reachable through rounding noise in the quotas
        const auto it = std::max_element(sizes.begin(), sizes.end());
        --*it;
        --assigned;
    }
    // Enforce the floor by taking from the currently largest subpopulation,
    // the less probable one on ties so sizes stay ordered by probability.
    for (std::size_t s = 0; s < kOperatorCount; ++s) {
        while (sizes[s] < floor) {
            std::size_t donor = 0;
            for (std::size_t d = 1; d < kOperatorCount; ++d)
                if (sizes[d] > sizes[donor] ||
                    (sizes[d] == sizes[donor] && probabilities[d] < probabilities[donor]))
                    donor = d;
            --sizes[donor];
            ++sizes[s];
        }
    }
    return sizes;
}

CommunicationResult communicate(const std::array<std::vector<Solution>, kOperatorCount>& subpops,
                                double elite_fraction, RngStream& rng) {
    CommunicationResult out{subpops, {}};
    std::vector<std::size_t> origin;
    std::array<std::vector<std::size_t>, kOperatorCount> ranked;

    for (std::size_t s = 0; s < kOperatorCount; ++s) {
        const auto& members = subpops[s];
        ranked[s].resize(members.size());
        std::iota(ranked[s].begin(), ranked[s].end(), std::size_t{0});
        std::stable_sort(ranked[s].begin(), ranked[s].end(), [&](std::size_t a, std::size_t b) {
            return members[a].fitness < members[b].fitness;
        });
        const std::size_t keep = std::min(fraction_count(elite_fraction, members.size()),
                                          members.size());
        for (std::size_t k = 0; k < keep; ++k) {
            out.elite_pool.push_back(members[ranked[s][k]]);
            origin.push_back(s);
        }
    }
    if (out.elite_pool.empty()) return out;

    for (std::size_t s = 0; s < kOperatorCount; ++s) {
        auto& members = out.subpopulations[s];
        if (members.size() < 2) continue;
        const std::size_t replace =
            std::min(fraction_count(elite_fraction, members.size()), members.size() - 1);

        std::vector<std::size_t> candidates;
        for (std::size_t e = 0; e < out.elite_pool.size(); ++e)
            if (origin[e] != s) candidates.push_back(e);
        if (candidates.empty()) {
            candidates.resize(out.elite_pool.size());
            std::iota(candidates.begin(), candidates.end(), std::size_t{0});
        }

        std::vector<std::size_t> bag;
        for (std::size_t k = 0; k < replace; ++k) {
            if (bag.empty()) bag = candidates;
            const std::size_t pick = rng.index(bag.size());
            const std::size_t worst = ranked[s][members.size() - 1 - k];
            // Migration never overwrites a member with a worse one, nor adds a
            // second copy of a genome the subpopulation already holds.
            const Solution& elite = out.elite_pool[bag[pick]];
            const bool present = std::any_of(members.begin(), members.end(),
                                             [&](const Solution& m) { return m.genome == elite.genome; });
            if (!present && elite.fitness < members[worst].fitness) members[worst] = elite;
            bag.erase(bag.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }
    return out;
}

namespace {

Genome mutant_for(Operator op, const Config& config, const mutation::MutationContext& ctx,
                  const Bounds& bounds, RngStream& rng, bool& crossover) {
    if (config.unified_strategy) {
        crossover = mutation::uses_crossover(*config.unified_strategy);
        return mutation::mutate(*config.unified_strategy, ctx, bounds, rng);
    }
    crossover = true;
    switch (op) {
    case Operator::current_to_best_1:
        return mutation::mutate(mutation::Strategy::current_to_best_1, ctx, bounds, rng);
    case Operator::rand_to_best_2:
        return rand_to_best_2(ctx, bounds, rng);
    case Operator::current_to_pbest_1:
        return mutation::mutate(mutation::Strategy::current_to_pbest_1, ctx, bounds, rng);
    }
    throw std::logic_error("unknown operator");
}

}  // namespace

Result optimize(const Objective& objective, const Bounds& bounds, const Config& config,
                RngStream& rng, const GenerationObserver& observer) {
    config.validate();
    Result result;

    Population pop = init_population(config.np, bounds, rng);
    for (auto& member : pop.members) evaluate(objective, member);
    result.evaluations = pop.size();

    mutation::Archive archive(config.archive_factor * config.np);
    archive.add(pop.members);

    result.best = pop.members[best_index(pop.members)];
    Genome x_best = result.best.genome;
    SubpopulationPlan plan;
    plan.sizes = initial_sizes(config.np);

    for (int generation = 1; generation <= config.generations; ++generation) {
        OperatorStats stats;
        std::vector<Solution> trials(pop.size());
        std::vector<std::size_t> owner(pop.size());

        std::size_t i = 0;
        for (std::size_t s = 0; s < kOperatorCount; ++s) {
            for (std::size_t k = 0; k < plan.sizes[s]; ++k, ++i) {
                mutation::MutationContext ctx{pop.members, x_best, archive.members(),
                                              config.pbest_fraction, config.F, i};
                bool crossover = true;
                Genome mutant = mutant_for(plan.operators[s], config, ctx, bounds, rng, crossover);
                trials[i].genome = crossover
                                       ? mutation::binomial_crossover(pop.members[i].genome,
                                                                      mutant, config.Cr, rng)
                                       : std::move(mutant);
                owner[i] = s;
            }
        }
        for (auto& trial : trials) evaluate(objective, trial);
        result.evaluations += trials.size();

        for (std::size_t j = 0; j < pop.size(); ++j) {
            if (trials[j].fitness < pop.members[j].fitness) {
                pop.members[j] = std::move(trials[j]);
                ++stats.successes[owner[j]];
            }
        }

        std::array<std::vector<Solution>, kOperatorCount> subpops;
        for (std::size_t s = 0, offset = 0; s < kOperatorCount; offset += plan.sizes[s], ++s)
            subpops[s].assign(pop.members.begin() + static_cast<std::ptrdiff_t>(offset),
                              pop.members.begin() + static_cast<std::ptrdiff_t>(offset + plan.sizes[s]));
        auto exchanged = communicate(subpops, config.elite_fraction, rng);
        pop.members.clear();
        for (auto& sub : exchanged.subpopulations)
            pop.members.insert(pop.members.end(), sub.begin(), sub.end());
        pop.generation = generation;

        const std::size_t current_best = best_index(pop.members);
        if (pop.members[current_best].fitness < result.best.fitness)
            result.best = pop.members[current_best];
        x_best = exchanged.elite_pool.empty()
                     ? pop.members[current_best].genome
                     : exchanged.elite_pool[rng.index(exchanged.elite_pool.size())].genome;

        archive.add(pop.members);
        stats = adapt_operator_probabilities(stats);
        result.trace.push_back({plan, stats});
        plan.sizes = apportion_sizes(stats.probabilities, config.np);

        result.history.push_back(result.best.fitness);
        if (observer) observer(generation, pop.members);
    }
    return result;
}

}  // namespace cropcal::demmogc
