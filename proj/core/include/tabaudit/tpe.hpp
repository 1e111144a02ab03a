#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tabaudit/search_space.hpp"
#include "tabaudit/trials.hpp"

namespace tabaudit {

struct TpeParams {
    std::size_t n_trials = 1000;
    std::size_t n_startup = 20;
    double good_fraction = 0.25;
    std::size_t n_candidates = 24;

    void validate() const;
};

/// Outcome of a sequential search. `trials` is in evaluation order.
struct SearchResult {
    std::vector<TrialRecord> trials;
    std::size_t best = 0; ///< position in `trials`
    std::vector<double> best_so_far;

    [[nodiscard]] const TrialRecord& best_trial() const { return trials.at(best); }
};

/// Options shared by the sequential searches: trial i of this run is
/// reported with index `index_offset + i` and group `group`, and evaluated
/// with seed derive_seed(seed, i).
struct RunLabel {
    std::size_t index_offset = 0;
    std::size_t group = 0;
};

/// Per-parameter Parzen density over the active observations of one parameter.
///
/// Continuous and integer parameters mix one truncated normal kernel per
/// observation with a prior kernel centred on the range (sigma = range). Each
/// observation's bandwidth is the larger gap to its sorted neighbours, clipped
/// to [range / min(100, n + 1), range]. Choices use counts plus one.
class ParzenDensity {
public:
    ParzenDensity(const ParamSpec& spec, std::vector<double> observations);

    [[nodiscard]] double log_density(double x) const;
    double sample(std::mt19937_64& rng) const;
    /// Kernel centres and bandwidths, prior kernel included.
    [[nodiscard]] const std::vector<double>& centres() const noexcept { return mu_; }
    [[nodiscard]] const std::vector<double>& bandwidths() const noexcept { return sigma_; }

private:
    const ParamSpec* spec_;
    std::vector<double> mu_;
    std::vector<double> sigma_;
    std::vector<double> mass_; ///< truncation normaliser per kernel
    std::vector<double> choice_prob_;
};

/// Next point to evaluate given the history (which must hold at least one trial).
ParamPoint tpe_suggest(const SearchSpace& space, const std::vector<TrialRecord>& history, const TpeParams& params,
                       std::mt19937_64& rng);

SearchResult tpe_optimize(const Objective& objective, const SearchSpace& space, const TpeParams& params,
                          std::uint64_t seed, const TrialObserver& observer = {}, RunLabel label = {});

/// Independent uniform draws; the baseline for both optimisers.
SearchResult random_search(const Objective& objective, const SearchSpace& space, std::size_t n_trials,
                           std::uint64_t seed, const TrialObserver& observer = {}, RunLabel label = {});

/// Fills best and best_so_far from trials.
void finalize_search(SearchResult& result);

} // namespace tabaudit
