#include "tabaudit/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

void GaParams::validate() const {
    if (population < 2 || generations == 0) {
        throw DomainError("ga: population must be >= 2 and generations >= 1");
    }
    if (elite >= population) {
        throw DomainError("ga: elite must be smaller than population");
    }
    if (tournament_k == 0 || tournament_k > population) {
        throw DomainError("ga: tournament_k must lie in [1, population]");
    }
    if (!(p_mutate >= 0.0 && p_mutate <= 1.0)) {
        throw DomainError("ga: p_mutate must lie in [0, 1]");
    }
    if (!(continuous_noise_frac >= 0.0) || !(integer_noise_divisor > 0.0)) {
        throw DomainError("ga: invalid mutation scale");
    }
}

void ga_mutate(const SearchSpace& space, const GaParams& params, ParamPoint& point, std::mt19937_64& rng) {
    std::bernoulli_distribution mutate(params.p_mutate);
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (!space.is_active(point, i) || std::isnan(point[i])) {
            continue;
        }
        if (!mutate(rng)) {
            continue;
        }
        const auto& p = space[i];
        const double range = p.hi - p.lo;
        switch (p.kind) {
        case ParamKind::Continuous:
            point[i] += std::normal_distribution<double>(0.0, params.continuous_noise_frac * range)(rng);
            break;
        case ParamKind::Integer:
            point[i] += std::round(std::normal_distribution<double>(0.0, range / params.integer_noise_divisor)(rng));
            break;
        case ParamKind::Binary:
        case ParamKind::Categorical:
            point[i] = space.sample_param(i, rng);
            break;
        }
        space.repair(point, rng);
    }
    space.repair(point, rng);
}

ParamPoint ga_crossover(const SearchSpace& space, const ParamPoint& a, const ParamPoint& b, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    ParamPoint child(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        child[i] = coin(rng) ? a[i] : b[i];
    }
    space.repair(child, rng);
    return child;
}

SearchResult ga_optimize(const Objective& objective, const SearchSpace& space, const GaParams& params,
                         std::uint64_t seed, const TrialObserver& observer, RunLabel label) {
    params.validate();
    std::mt19937_64 rng(seed);
    std::vector<ParamPoint> population;
    population.reserve(params.population);
    for (std::size_t i = 0; i < params.population; ++i) {
        population.push_back(space.sample_uniform(rng));
    }

    SearchResult result;
    result.trials.reserve(params.population * params.generations);
    std::size_t local = 0;
    for (std::size_t gen = 0; gen < params.generations; ++gen) {
        std::vector<double> fitness(params.population);
        for (std::size_t i = 0; i < params.population; ++i, ++local) {
            auto record = run_trial(objective, population[i], {label.index_offset + local, derive_seed(seed, local)},
                                    label.group + gen);
            fitness[i] = record.value();
            if (observer) {
                observer(record);
            }
            result.trials.push_back(std::move(record));
        }
        if (gen + 1 == params.generations) {
            break;
        }

        std::vector<std::size_t> order(params.population);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
        auto tournament = [&]() -> const ParamPoint& {
            std::uniform_int_distribution<std::size_t> pick(0, params.population - 1);
            std::size_t winner = pick(rng);
            for (std::size_t k = 1; k < params.tournament_k; ++k) {
                const std::size_t c = pick(rng);
                if (fitness[c] < fitness[winner] || (fitness[c] == fitness[winner] && c < winner)) {
                    winner = c;
                }
            }
            return population[winner];
        };

        std::vector<ParamPoint> next;
        next.reserve(params.population);
        for (std::size_t e = 0; e < params.elite; ++e) {
            next.push_back(population[order[e]]);
        }
        while (next.size() < params.population) {
            const ParamPoint& a = tournament();
            const ParamPoint& b = tournament();
            for (int child = 0; child < 2 && next.size() < params.population; ++child) {
                ParamPoint c = ga_crossover(space, a, b, rng);
                ga_mutate(space, params, c, rng);
                next.push_back(std::move(c));
            }
        }
        population = std::move(next);
    }
    finalize_search(result);
    return result;
}

} // namespace tabaudit
