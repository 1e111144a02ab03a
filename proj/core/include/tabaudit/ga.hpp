#pragma once

#include <cstdint>

#include "tabaudit/tpe.hpp"

namespace tabaudit {

struct GaParams {
    std::size_t population = 16;
    std::size_t generations = 100;
    std::size_t elite = 4;
    std::size_t tournament_k = 3;
    double p_mutate = 0.5;
    double continuous_noise_frac = 0.1;
    double integer_noise_divisor = 6.0;

    void validate() const;
};

/// Per-parameter mutation: each active parameter independently, with
/// probability p_mutate. Result is repaired into the space.
void ga_mutate(const SearchSpace& space, const GaParams& params, ParamPoint& point, std::mt19937_64& rng);

/// Child taking each parameter from either parent with equal probability.
ParamPoint ga_crossover(const SearchSpace& space, const ParamPoint& a, const ParamPoint& b, std::mt19937_64& rng);

/// Every generation evaluates the whole population (trial group = generation),
/// keeps the `elite` best unchanged and refills the rest with mutated
/// crossover children of tournament winners.
SearchResult ga_optimize(const Objective& objective, const SearchSpace& space, const GaParams& params,
                         std::uint64_t seed, const TrialObserver& observer = {}, RunLabel label = {});

} // namespace tabaudit
