#pragma once

/// @file baselines.hpp
/// Comparison optimizers sharing the DE-MMOGC call shape: canonical DE,
/// a real-coded GA, global-best PSO and Harris Hawks Optimization.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cropcal/core.hpp"
#include "cropcal/mutation.hpp"

namespace cropcal::baselines {

// ---------------------------------------------------------------------------
// Differential evolution
// ---------------------------------------------------------------------------

struct DeConfig {
    std::size_t np = 10;
    int generations = 50;
    mutation::Strategy strategy = mutation::Strategy::best_1;
    /// F is drawn uniformly from [F_low, F_high] once per generation; a
    /// collapsed interval uses F_low without consuming a draw.
    double F_low = 0.5;
    double F_high = 1.0;
    double Cr = 0.7;
    double pbest_fraction = 0.30;
    std::size_t archive_factor = 10;

    void validate() const;
};

OptimizationResult de_optimize(const Objective& objective, const Bounds& bounds,
                               const DeConfig& config, RngStream& rng,
                               const GenerationObserver& observer = {});

// ---------------------------------------------------------------------------
// Genetic algorithm
// ---------------------------------------------------------------------------

struct GaConfig {
    std::size_t np = 10;
    int generations = 50;
    std::size_t tournament_size = 3;
    double blend_alpha = 0.5;
    double mutation_mu = 0.0;
    double mutation_sigma = 1.0;
    double indpb = 0.2;
    std::size_t elites = 1;

    void validate() const;
};

/// BLX-alpha: per coordinate gamma ~ U[-alpha, 1 + alpha],
/// children (1 - gamma) a + gamma b and gamma a + (1 - gamma) b.
std::pair<Genome, Genome> blend_crossover(std::span<const double> a, std::span<const double> b,
                                          double alpha, RngStream& rng);

/// Adds N(mu, sigma) to each coordinate independently with probability indpb.
void gaussian_mutation(Genome& genome, double mu, double sigma, double indpb, RngStream& rng);

/// Index of the best of `size` uniformly drawn (with replacement) members.
std::size_t tournament_select(std::span<const Solution> members, std::size_t size,
                              RngStream& rng);

OptimizationResult ga_optimize(const Objective& objective, const Bounds& bounds,
                               const GaConfig& config, RngStream& rng,
                               const GenerationObserver& observer = {});

// ---------------------------------------------------------------------------
// Particle swarm
// ---------------------------------------------------------------------------

struct PsoConfig {
    std::size_t swarm = 10;
    int iterations = 50;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    /// Velocity limit as a fraction of each dimension's range.
    double velocity_fraction = 0.2;

    void validate() const;
};

struct Swarm {
    /// Current positions with their fitness.
    std::vector<Solution> particles;
    std::vector<Genome> velocities;
    std::vector<Solution> personal_best;
    Solution global_best;
};

/// Random positions, velocities in [-vmax, vmax], evaluated personal bests.
Swarm init_swarm(const Objective& objective, const Bounds& bounds, const PsoConfig& config,
                 RngStream& rng);

/// One velocity/position update followed by evaluation and best updates.
void pso_iterate(Swarm& swarm, const Objective& objective, const Bounds& bounds,
                 const PsoConfig& config, RngStream& rng);

OptimizationResult pso_optimize(const Objective& objective, const Bounds& bounds,
                                const PsoConfig& config, RngStream& rng,
                                const GenerationObserver& observer = {});

// ---------------------------------------------------------------------------
// Harris hawks optimization
// ---------------------------------------------------------------------------

struct HhoConfig {
    std::size_t hawks = 10;
    int iterations = 50;
    double levy_beta = 1.5;
    /// Pins the escape energy E; used to exercise individual phases.
    std::optional<double> energy_override;

    void validate() const;
};

/// Levy-flight step (Mantegna's algorithm, scaled by 0.01).
Genome levy_flight(std::size_t dimension, double beta, RngStream& rng);

/// Moves one hawk and returns its new evaluated state. `hawks` is the flock
/// at the start of the iteration; `rabbit` the best position found so far.
Solution hho_move(std::size_t hawk, std::span<const Solution> hawks, const Solution& rabbit,
                  double energy, const Objective& objective, const Bounds& bounds,
                  const HhoConfig& config, RngStream& rng, std::size_t& evaluations);

OptimizationResult hho_optimize(const Objective& objective, const Bounds& bounds,
                                const HhoConfig& config, RngStream& rng,
                                const GenerationObserver& observer = {});

}  // namespace cropcal::baselines
