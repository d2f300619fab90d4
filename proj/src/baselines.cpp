#include "cropcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cropcal::baselines {

namespace {

void update_best(Solution& best, const Solution& candidate) {
    if (candidate.fitness < best.fitness) best = candidate;
}

}  // namespace

// ---------------------------------------------------------------------------
// DE
// ---------------------------------------------------------------------------

void DeConfig::validate() const {
    if (np < 4) throw ConfigError("de: np must be at least 4");
    if (mutation::parent_count(strategy) + 1 > np)
        throw ConfigError("de: population too small for strategy " +
                          std::string(mutation::to_string(strategy)));
    if (generations < 0) throw ConfigError("de: generations must be non-negative");
    if (!(F_low > 0.0 && F_low <= F_high) || !std::isfinite(F_high))
        throw ConfigError("de: F interval must satisfy 0 < F_low <= F_high");
    if (!(Cr >= 0.0 && Cr <= 1.0)) throw ConfigError("de: Cr must lie in [0, 1]");
    if (!(pbest_fraction > 0.0 && pbest_fraction <= 1.0))
        throw ConfigError("de: p-best fraction must lie in (0, 1]");
}

OptimizationResult de_optimize(const Objective& objective, const Bounds& bounds,
                               const DeConfig& config, RngStream& rng,
                               const GenerationObserver& observer) {
    config.validate();
    OptimizationResult result;
    Population pop = init_population(config.np, bounds, rng);
    for (auto& member : pop.members) evaluate(objective, member);
    result.evaluations = pop.size();
    result.best = pop.members[best_index(pop.members)];

    mutation::Archive archive(config.archive_factor * config.np);
    archive.add(pop.members);
    const bool crossover = mutation::uses_crossover(config.strategy);

    for (int generation = 1; generation <= config.generations; ++generation) {
        const double F =
            config.F_low == config.F_high ? config.F_low : rng.uniform(config.F_low, config.F_high);
        const Genome best = pop.members[best_index(pop.members)].genome;

        std::vector<Solution> trials(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) {
            mutation::MutationContext ctx{pop.members, best, archive.members(),
                                          config.pbest_fraction, F, i};
            Genome mutant = mutation::mutate(config.strategy, ctx, bounds, rng);
            trials[i].genome =
                crossover ? mutation::binomial_crossover(pop.members[i].genome, mutant, config.Cr, rng)
                          : std::move(mutant);
        }
        for (auto& trial : trials) evaluate(objective, trial);
        result.evaluations += trials.size();

        for (std::size_t i = 0; i < pop.size(); ++i)
            if (trials[i].fitness < pop.members[i].fitness) pop.members[i] = std::move(trials[i]);
        pop.generation = generation;
        archive.add(pop.members);

        update_best(result.best, pop.members[best_index(pop.members)]);
        result.history.push_back(result.best.fitness);
        if (observer) observer(generation, pop.members);
    }
    return result;
}

// ---------------------------------------------------------------------------
// GA
// ---------------------------------------------------------------------------

void GaConfig::validate() const {
    if (np < 2) throw ConfigError("ga: population must hold at least 2 individuals");
    if (generations < 0) throw ConfigError("ga: generations must be non-negative");
    if (tournament_size == 0) throw ConfigError("ga: tournament size must be positive");
    if (!(blend_alpha >= 0.0)) throw ConfigError("ga: blend alpha must be non-negative");
    if (!(mutation_sigma >= 0.0)) throw ConfigError("ga: mutation sigma must be non-negative");
    if (!(indpb >= 0.0 && indpb <= 1.0)) throw ConfigError("ga: indpb must lie in [0, 1]");
    if (elites >= np) throw ConfigError("ga: elites must be fewer than the population");
}

std::pair<Genome, Genome> blend_crossover(std::span<const double> a, std::span<const double> b,
                                          double alpha, RngStream& rng) {
    if (a.size() != b.size()) throw std::invalid_argument("blend_crossover: length mismatch");
    Genome c1(a.size()), c2(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double gamma = (1.0 + 2.0 * alpha) * rng.uniform() - alpha;
        c1[d] = (1.0 - gamma) * a[d] + gamma * b[d];
        c2[d] = gamma * a[d] + (1.0 - gamma) * b[d];
    }
    return {std::move(c1), std::move(c2)};
}

void gaussian_mutation(Genome& genome, double mu, double sigma, double indpb, RngStream& rng) {
    for (double& x : genome)
        if (rng.uniform() < indpb) x += rng.normal(mu, sigma);
}

std::size_t tournament_select(std::span<const Solution> members, std::size_t size,
                              RngStream& rng) {
    if (members.empty()) throw std::invalid_argument("tournament_select: empty population");
    std::size_t winner = rng.index(members.size());
    for (std::size_t k = 1; k < size; ++k) {
        const std::size_t challenger = rng.index(members.size());
        if (members[challenger].fitness < members[winner].fitness) winner = challenger;
    }
    return winner;
}

OptimizationResult ga_optimize(const Objective& objective, const Bounds& bounds,
                               const GaConfig& config, RngStream& rng,
                               const GenerationObserver& observer) {
    config.validate();
    OptimizationResult result;
    Population pop = init_population(std::max<std::size_t>(config.np, 4), bounds, rng);
    pop.members.resize(config.np);
    for (auto& member : pop.members) evaluate(objective, member);
    result.evaluations = pop.size();
    result.best = pop.members[best_index(pop.members)];

    for (int generation = 1; generation <= config.generations; ++generation) {
        std::vector<Solution> elite_members = pop.members;
        std::stable_sort(elite_members.begin(), elite_members.end(),
                         [](const Solution& x, const Solution& y) { return x.fitness < y.fitness; });
        elite_members.resize(config.elites);

        std::vector<Solution> offspring(pop.size());
        for (auto& child : offspring)
            child.genome = pop.members[tournament_select(pop.members, config.tournament_size, rng)].genome;
        for (std::size_t i = 0; i + 1 < offspring.size(); i += 2) {
            auto [c1, c2] = blend_crossover(offspring[i].genome, offspring[i + 1].genome,
                                            config.blend_alpha, rng);
            offspring[i].genome = std::move(c1);
            offspring[i + 1].genome = std::move(c2);
        }
        for (auto& child : offspring) {
            gaussian_mutation(child.genome, config.mutation_mu, config.mutation_sigma, config.indpb, rng);
            child.genome = clamp(child.genome, bounds);
            evaluate(objective, child);
        }
        result.evaluations += offspring.size();

        // Elitism: the previous best members replace the worst offspring.
        std::vector<std::size_t> order(offspring.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return offspring[x].fitness > offspring[y].fitness;
        });
        for (std::size_t e = 0; e < elite_members.size(); ++e)
            offspring[order[e]] = elite_members[e];

        pop.members = std::move(offspring);
        pop.generation = generation;
        update_best(result.best, pop.members[best_index(pop.members)]);
        result.history.push_back(result.best.fitness);
        if (observer) observer(generation, pop.members);
    }
    return result;
}

// ---------------------------------------------------------------------------
// PSO
// ---------------------------------------------------------------------------

void PsoConfig::validate() const {
    if (swarm < 1) throw ConfigError("pso: swarm must hold at least one particle");
    if (iterations < 0) throw ConfigError("pso: iterations must be non-negative");
    if (!(velocity_fraction > 0.0)) throw ConfigError("pso: velocity fraction must be positive");
}

Swarm init_swarm(const Objective& objective, const Bounds& bounds, const PsoConfig& config,
                 RngStream& rng) {
    Swarm swarm;
    const std::size_t dim = bounds.dimension();
    swarm.particles.resize(config.swarm);
    swarm.velocities.assign(config.swarm, Genome(dim));
    for (std::size_t i = 0; i < config.swarm; ++i) {
        auto& particle = swarm.particles[i];
        particle.genome.resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            particle.genome[d] = bounds.lower()[d] + bounds.width(d) * rng.uniform();
        for (std::size_t d = 0; d < dim; ++d) {
            const double vmax = config.velocity_fraction * bounds.width(d);
            swarm.velocities[i][d] = rng.uniform(-vmax, vmax);
        }
        evaluate(objective, particle);
    }
    swarm.personal_best = swarm.particles;
    swarm.global_best = swarm.particles[best_index(swarm.particles)];
    return swarm;
}

void pso_iterate(Swarm& swarm, const Objective& objective, const Bounds& bounds,
                 const PsoConfig& config, RngStream& rng) {
    const std::size_t dim = bounds.dimension();
    for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
        auto& x = swarm.particles[i].genome;
        auto& v = swarm.velocities[i];
        const auto& p = swarm.personal_best[i].genome;
        const auto& g = swarm.global_best.genome;
        for (std::size_t d = 0; d < dim; ++d) {
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            const double vmax = config.velocity_fraction * bounds.width(d);
            v[d] = config.inertia * v[d] + config.cognitive * r1 * (p[d] - x[d]) +
                   config.social * r2 * (g[d] - x[d]);
            v[d] = std::clamp(v[d], -vmax, vmax);
            x[d] = std::clamp(x[d] + v[d], bounds.lower()[d], bounds.upper()[d]);
        }
    }
    for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
        evaluate(objective, swarm.particles[i]);
        if (swarm.particles[i].fitness < swarm.personal_best[i].fitness)
            swarm.personal_best[i] = swarm.particles[i];
    }
    update_best(swarm.global_best, swarm.personal_best[best_index(swarm.personal_best)]);
}

OptimizationResult pso_optimize(const Objective& objective, const Bounds& bounds,
                                const PsoConfig& config, RngStream& rng,
                                const GenerationObserver& observer) {
    config.validate();
    OptimizationResult result;
    Swarm swarm = init_swarm(objective, bounds, config, rng);
    result.evaluations = swarm.particles.size();
    for (int iteration = 1; iteration <= config.iterations; ++iteration) {
        pso_iterate(swarm, objective, bounds, config, rng);
        result.evaluations += swarm.particles.size();
        result.history.push_back(swarm.global_best.fitness);
        if (observer) observer(iteration, swarm.particles);
    }
    result.best = swarm.global_best;
    return result;
}

// ---------------------------------------------------------------------------
// HHO
// ---------------------------------------------------------------------------

void HhoConfig::validate() const {
    if (hawks < 2) throw ConfigError("hho: at least two hawks are required");
    if (iterations < 0) throw ConfigError("hho: iterations must be non-negative");
    if (!(levy_beta > 0.0 && levy_beta <= 2.0)) throw ConfigError("hho: levy beta must lie in (0, 2]");
}

Genome levy_flight(std::size_t dimension, double beta, RngStream& rng) {
    const double sigma =
        std::pow(std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0) /
                     (std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0)),
                 1.0 / beta);
    Genome step(dimension);
    for (double& s : step) {
        const double u = rng.normal() * sigma;
        const double v = rng.normal();
        s = 0.01 * u / std::pow(std::abs(v), 1.0 / beta);
    }
    return step;
}

Solution hho_move(std::size_t hawk, std::span<const Solution> hawks, const Solution& rabbit,
                  double energy, const Objective& objective, const Bounds& bounds,
                  const HhoConfig& config, RngStream& rng, std::size_t& evaluations) {
    const std::size_t dim = bounds.dimension();
    const Solution& current = hawks[hawk];
    const Genome& x = current.genome;
    const Genome& target = rabbit.genome;

    Genome mean(dim, 0.0);
    for (const auto& h : hawks)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += h.genome[d] / static_cast<double>(hawks.size());

    auto finish = [&](Genome genome) {
        Solution s{clamp(genome, bounds)};
        evaluate(objective, s);
        ++evaluations;
        return s;
    };

    Genome next(dim);
    if (std::abs(energy) >= 1.0) {
        // Exploration: perch relative to a random hawk or to the flock mean.
        const double q = rng.uniform();
        if (q >= 0.5) {
            const Genome& random_hawk = hawks[rng.index(hawks.size())].genome;
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            for (std::size_t d = 0; d < dim; ++d)
                next[d] = random_hawk[d] - r1 * std::abs(random_hawk[d] - 2.0 * r2 * x[d]);
        } else {
            const double r3 = rng.uniform();
            const double r4 = rng.uniform();
            for (std::size_t d = 0; d < dim; ++d)
                next[d] = (target[d] - mean[d]) -
                          r3 * (bounds.lower()[d] + r4 * bounds.width(d));
        }
        return finish(std::move(next));
    }

    const double r = rng.uniform();
    const bool soft = std::abs(energy) >= 0.5;
    if (r >= 0.5) {
        if (soft) {
            const double jump = 2.0 * (1.0 - rng.uniform());
            for (std::size_t d = 0; d < dim; ++d)
                next[d] = (target[d] - x[d]) - energy * std::abs(jump * target[d] - x[d]);
        } else {
            for (std::size_t d = 0; d < dim; ++d)
                next[d] = target[d] - energy * std::abs(target[d] - x[d]);
        }
        return finish(std::move(next));
    }

    // Besiege with progressive rapid dives: accept Y, then Z, only if they improve.
    const double jump = 2.0 * (1.0 - rng.uniform());
    const Genome& anchor = soft ? x : mean;
    Genome y(dim);
    for (std::size_t d = 0; d < dim; ++d)
        y[d] = target[d] - energy * std::abs(jump * target[d] - anchor[d]);
    Solution dive_y = finish(y);
    if (dive_y.fitness < current.fitness) return dive_y;

    const Genome levy = levy_flight(dim, config.levy_beta, rng);
    Genome z(dim);
    for (std::size_t d = 0; d < dim; ++d) z[d] = y[d] + rng.uniform() * levy[d];
    Solution dive_z = finish(std::move(z));
    if (dive_z.fitness < current.fitness) return dive_z;
    return current;
}

OptimizationResult hho_optimize(const Objective& objective, const Bounds& bounds,
                                const HhoConfig& config, RngStream& rng,
                                const GenerationObserver& observer) {
    config.validate();
    OptimizationResult result;
    Population flock = init_population(std::max<std::size_t>(config.hawks, 4), bounds, rng);
    flock.members.resize(config.hawks);
    for (auto& hawk : flock.members) evaluate(objective, hawk);
    result.evaluations = flock.size();
    Solution rabbit = flock.members[best_index(flock.members)];

    for (int iteration = 1; iteration <= config.iterations; ++iteration) {
        const double decay =
            2.0 * (1.0 - static_cast<double>(iteration - 1) / static_cast<double>(config.iterations));
        std::vector<Solution> moved(flock.size());
        for (std::size_t i = 0; i < flock.size(); ++i) {
            const double energy =
                config.energy_override ? *config.energy_override : decay * (2.0 * rng.uniform() - 1.0);
            moved[i] = hho_move(i, flock.members, rabbit, energy, objective, bounds, config, rng,
                                result.evaluations);
        }
        flock.members = std::move(moved);
        flock.generation = iteration;
        update_best(rabbit, flock.members[best_index(flock.members)]);
        result.history.push_back(rabbit.fitness);
        if (observer) observer(iteration, flock.members);
    }
    result.best = rabbit;
    return result;
}

}  // namespace cropcal::baselines
