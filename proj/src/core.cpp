#include "cropcal/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cropcal {

Bounds::Bounds(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty()) throw ConfigError("bounds: dimension must be at least 1");
    if (lower_.size() != upper_.size())
        throw ConfigError("bounds: lower and upper differ in dimension");
    for (std::size_t d = 0; d < lower_.size(); ++d) {
        if (!std::isfinite(lower_[d]) || !std::isfinite(upper_[d]) || lower_[d] > upper_[d]) {
            std::ostringstream msg;
            msg << "bounds: invalid interval [" << lower_[d] << ", " << upper_[d]
                << "] in dimension " << d;
            throw ConfigError(msg.str());
        }
    }
}

bool Bounds::contains(std::span<const double> genome) const {
    if (genome.size() != dimension()) return false;
    for (std::size_t d = 0; d < genome.size(); ++d)
        if (genome[d] < lower_[d] || genome[d] > upper_[d]) return false;
    return true;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix64(seed ^ mix64(stream_id + 1))) {}

RngStream RngStream::derive(std::uint64_t child_id) const {
    return RngStream(seed_, mix64(stream_id_) ^ mix64(child_id ^ 0x5851f42d4c957f2dULL));
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double RngStream::normal(double mean, double stddev) { return mean + stddev * normal(); }

std::size_t RngStream::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::index: empty range");
    const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

Population init_population(std::size_t np, const Bounds& bounds, RngStream& rng) {
    if (np < 4) throw ConfigError("population size must be at least 4, got " + std::to_string(np));
    Population pop;
    pop.members.resize(np);
    for (auto& member : pop.members) {
        member.genome.resize(bounds.dimension());
        for (std::size_t d = 0; d < bounds.dimension(); ++d)
            member.genome[d] = bounds.lower()[d] + bounds.width(d) * rng.uniform();
    }
    return pop;
}

Genome clamp(std::span<const double> genome, const Bounds& bounds) {
    if (genome.size() != bounds.dimension())
        throw std::invalid_argument("clamp: genome has " + std::to_string(genome.size()) +
                                    " coordinates, bounds have " +
                                    std::to_string(bounds.dimension()));
    Genome out(genome.begin(), genome.end());
    for (std::size_t d = 0; d < out.size(); ++d)
        out[d] = std::clamp(out[d], bounds.lower()[d], bounds.upper()[d]);
    return out;
}

void evaluate(const Objective& objective, Solution& solution) {
    const double value = objective(solution.genome);
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "objective returned non-finite value " << value << " at genome [";
        for (std::size_t d = 0; d < solution.genome.size(); ++d)
            msg << (d ? ", " : "") << solution.genome[d];
        msg << "]";
        throw NumericalError(msg.str());
    }
    solution.fitness = value;
    solution.evaluated = true;
}

std::size_t best_index(std::span<const Solution> members) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
        if (members[i].fitness < members[best].fitness) best = i;
    return best;
}

std::size_t fraction_count(double fraction, std::size_t count) {
    const double raw = fraction * static_cast<double>(count);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
}

}  // namespace cropcal
