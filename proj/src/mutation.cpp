#include "cropcal/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cropcal::mutation {

namespace {

struct StrategyInfo {
    Strategy strategy;
    std::string_view name;
    std::size_t parents;
};

constexpr StrategyInfo kCatalog[] = {
    {Strategy::rand_1, "rand/1", 3},
    {Strategy::current_1, "current/1", 2},
    {Strategy::best_1, "best/1", 2},
    {Strategy::rand_2, "rand/2", 5},
    {Strategy::best_2, "best/2", 4},
    {Strategy::current_to_best_1, "current-to-best/1", 2},
    {Strategy::current_to_rand_1, "current-to-rand/1", 3},
    {Strategy::current_to_pbest_1, "current-to-pbest/1", 2},
};

const StrategyInfo& info(Strategy s) {
    for (const auto& entry : kCatalog)
        if (entry.strategy == s) return entry;
    throw std::logic_error("unknown mutation strategy");
}

bool needs_best(Strategy s) {
    return s == Strategy::best_1 || s == Strategy::best_2 || s == Strategy::current_to_best_1;
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
    for (const auto& entry : kCatalog)
        if (entry.strategy == s) return entry.name;
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    if (text.starts_with("DE/")) text.remove_prefix(3);
    // "best/1/bin" style suffixes name the crossover, which is always binomial here.
    if (text.ends_with("/bin")) text.remove_suffix(4);
    for (const auto& entry : kCatalog)
        if (entry.name == text) return entry.strategy;
    return std::nullopt;
}

std::size_t parent_count(Strategy s) noexcept { return info(s).parents; }

bool uses_crossover(Strategy s) noexcept { return s != Strategy::current_to_rand_1; }

std::vector<std::size_t> sample_parents(std::size_t population_size, std::size_t exclude,
                                        std::size_t count, RngStream& rng) {
    const std::size_t available = population_size - (exclude < population_size ? 1 : 0);
    if (count > available)
        throw std::invalid_argument("mutation needs " + std::to_string(count) +
                                    " distinct parents besides the target, population offers " +
                                    std::to_string(available));
    std::vector<std::size_t> pool;
    pool.reserve(available);
    for (std::size_t i = 0; i < population_size; ++i)
        if (i != exclude) pool.push_back(i);
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t j = k + rng.index(pool.size() - k);
        std::swap(pool[k], pool[j]);
    }
    pool.resize(count);
    return pool;
}

Genome mutate_raw(Strategy strategy, const MutationContext& ctx,
                  std::span<const std::size_t> parents, std::span<const double> pbest) {
    if (parents.size() < parent_count(strategy))
        throw std::invalid_argument("mutate: strategy " + std::string(to_string(strategy)) +
                                    " needs " + std::to_string(parent_count(strategy)) +
                                    " parents");
    if (ctx.target_index >= ctx.population.size())
        throw std::invalid_argument("mutate: target index out of range");
    const Genome& x = ctx.population[ctx.target_index].genome;
    const std::size_t dim = x.size();
    if (needs_best(strategy) && ctx.best.size() != dim)
        throw std::invalid_argument("mutate: best vector missing or of wrong dimension");
    if (strategy == Strategy::current_to_pbest_1 && pbest.size() != dim)
        throw std::invalid_argument("mutate: p-best vector missing or of wrong dimension");

    auto p = [&](std::size_t k) -> const Genome& { return ctx.population[parents[k]].genome; };
    const double F = ctx.F;
    Genome v(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        switch (strategy) {
        case Strategy::rand_1:
            v[d] = p(0)[d] + F * (p(1)[d] - p(2)[d]);
            break;
        case Strategy::current_1:
            v[d] = x[d] + F * (p(0)[d] - p(1)[d]);
            break;
        case Strategy::best_1:
            v[d] = ctx.best[d] + F * (p(0)[d] - p(1)[d]);
            break;
        case Strategy::rand_2:
            v[d] = p(0)[d] + F * (p(1)[d] - p(2)[d]) + F * (p(3)[d] - p(4)[d]);
            break;
        case Strategy::best_2:
            v[d] = ctx.best[d] + F * (p(0)[d] - p(1)[d]) + F * (p(2)[d] - p(3)[d]);
            break;
        case Strategy::current_to_best_1:
            v[d] = x[d] + F * (ctx.best[d] - x[d]) + F * (p(0)[d] - p(1)[d]);
            break;
        case Strategy::current_to_rand_1:
            v[d] = x[d] + F * (p(0)[d] - x[d]) + F * (p(1)[d] - p(2)[d]);
            break;
        case Strategy::current_to_pbest_1:
            v[d] = x[d] + F * (pbest[d] - x[d]) + F * (p(0)[d] - p(1)[d]);
            break;
        }
    }
    return v;
}

Genome mutate(Strategy strategy, const MutationContext& ctx, const Bounds& bounds,
              RngStream& rng) {
    if (!std::isfinite(ctx.F)) throw std::invalid_argument("mutate: F must be finite");
    const auto parents =
        sample_parents(ctx.population.size(), ctx.target_index, parent_count(strategy), rng);
    std::span<const double> pbest;
    if (strategy == Strategy::current_to_pbest_1)
        pbest = select_pbest(ctx.pbest_archive, ctx.pbest_fraction, rng).genome;
    return clamp(mutate_raw(strategy, ctx, parents, pbest), bounds);
}

Genome binomial_crossover(std::span<const double> target, std::span<const double> mutant,
                          double Cr, RngStream& rng) {
    if (target.size() != mutant.size())
        throw std::invalid_argument("binomial_crossover: target and mutant lengths differ");
    if (!(Cr >= 0.0 && Cr <= 1.0))
        throw std::invalid_argument("binomial_crossover: Cr must lie in [0, 1]");
    if (target.empty()) return {};
    const std::size_t forced = rng.index(target.size());
    Genome trial(target.begin(), target.end());
    for (std::size_t d = 0; d < trial.size(); ++d)
        if (rng.uniform() < Cr || d == forced) trial[d] = mutant[d];
    return trial;
}

const Solution& select_pbest(std::span<const Solution> archive, double p, RngStream& rng) {
    if (archive.empty()) throw std::invalid_argument("select_pbest: archive is empty");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("select_pbest: p must lie in (0, 1]");
    std::vector<std::size_t> order(archive.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return archive[a].fitness < archive[b].fitness;
    });
    const std::size_t top = std::max<std::size_t>(1, fraction_count(p, archive.size()));
    return archive[order[rng.index(top)]];
}

void Archive::add(std::span<const Solution> solutions) {
    members_.insert(members_.end(), solutions.begin(), solutions.end());
    if (members_.size() > capacity_)
        members_.erase(members_.begin(),
                       members_.begin() + static_cast<std::ptrdiff_t>(members_.size() - capacity_));
}

}  // namespace cropcal::mutation
