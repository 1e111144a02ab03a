#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabaudit/coverage.hpp"
#include "tabaudit/discriminator.hpp"
#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/generator.hpp"
#include "tabaudit/search_space.hpp"
#include "tabaudit/tpe.hpp"
#include "tabaudit/trials.hpp"

namespace tabaudit {

enum class TripleMode { Verbatim, Complemented };

std::string_view to_string(TripleMode mode) noexcept;
std::optional<TripleMode> parse_triple_mode(std::string_view s) noexcept;

/// Combined coverage and distinguishability loss in [0, 1].
///   verbatim:     sqrt(R^2 + P^2 + (2|0.5 - auc|)^2) / sqrt(3)
///   complemented: sqrt((1-R)^2 + (1-P)^2 + (2|0.5 - auc|)^2) / sqrt(3)
double triple_loss(double recall, double precision, double auc, TripleMode mode = TripleMode::Verbatim);

/// Budget for scoring one prior configuration against real features.
struct PriorEvalOptions {
    std::size_t n_eval = 200;
    std::size_t n_boot = kDefaultBootstraps;
    GbdtParams gbdt = GbdtParams::grid_mode();
    CoverageParams coverage{};
    RowCountSampler rows{};
    ReplayOptions replay{};
    FeatureOptions features{};
    unsigned workers = 1; ///< threads inside one evaluation
};

/// Real-side inputs shared by every trial of one search run.
struct RealReference {
    FeatureMatrix sample;          ///< full-schema rows compared against
    ColumnCountSampler columns;    ///< column counts of the whole real corpus
    PriorConfig base;              ///< carries the column bounds

    /// Fixes one subsample of `n` rows (seeded) of `real_full` for the run.
    static RealReference make(const FeatureMatrix& real_full, std::size_t n, std::uint64_t seed);
};

/// Deterministic row subsample (kept in original order). Throws when n > rows.
FeatureMatrix sample_rows(const FeatureMatrix& m, std::size_t n, std::uint64_t seed);

struct ConfigEvaluation {
    AucReport auc;
    std::optional<CoverageReport> coverage;
    std::size_t n_synthetic = 0;
};

/// Generate n_eval tables from theta, featurise them and compare with the
/// reference sample (truncated to the same size): bootstrap AUC, plus
/// coverage when asked (real as A, synthetic as B).
ConfigEvaluation evaluate_config(const PriorConfig& theta, const RealReference& real, const PriorEvalOptions& options,
                                 bool with_coverage, std::uint64_t seed);

/// Objective value = mean bootstrap AUC.
Evaluation evaluate_config_auc(const PriorConfig& theta, const RealReference& real, const PriorEvalOptions& options,
                               std::uint64_t seed);
/// Objective value = triple_loss(recall, precision, auc).
Evaluation evaluate_config_triple(const PriorConfig& theta, const RealReference& real,
                                  const PriorEvalOptions& options, TripleMode mode, std::uint64_t seed);

/// Objectives over prior_search_space(). Failures score 1 (the worst AUC
/// distance and the loss ceiling).
Objective auc_objective(const RealReference& real, const PriorEvalOptions& options);
Objective triple_objective(const RealReference& real, const PriorEvalOptions& options, TripleMode mode);

struct GridSearchResult {
    std::vector<TrialRecord> trials;   ///< grid order
    std::vector<std::size_t> ranking;  ///< successful trials, ascending value, index tie-break
    std::size_t n_failed = 0;
};

/// Evaluates every grid point (trial i seeded with derive_seed(master_seed, i))
/// on up to `workers` threads. The observer sees trials in index order.
/// Trials already in `done` (by index) are reused instead of re-evaluated.
GridSearchResult grid_search(const Objective& objective, const std::vector<ParamPoint>& grid,
                             std::uint64_t master_seed, unsigned workers, const TrialObserver& observer = {},
                             const std::vector<TrialRecord>& done = {});

/// Ranked trial table (trials in ranking order, failures last).
std::string ranked_trials_csv(const SearchSpace& space, const GridSearchResult& result);

/// Histogram of successful trial values: bin_lo,bin_hi,count over [0, 1].
std::string value_histogram_csv(const std::vector<TrialRecord>& trials, std::size_t bins = 50);

struct PosthocRow {
    std::size_t config = 0;
    std::size_t repeat = 0;
    double auc_mean = 0.0;
    double auc_std = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct PosthocSummary {
    std::size_t config = 0;
    PriorConfig theta;
    double auc_mean = 0.0;  ///< mean of repeat means
    double auc_std = 0.0;   ///< population std of repeat means
    double recall = 0.0;
    double precision = 0.0;
};

struct PosthocReport {
    std::vector<PosthocRow> rows;
    std::vector<PosthocSummary> summaries;
};

/// For each config and repeat: draw a fresh real sample of options.n_eval rows,
/// generate as many synthetic tables, and record bootstrap AUC and coverage.
PosthocReport posthoc_evaluate(const std::vector<PriorConfig>& configs, const FeatureMatrix& real_full,
                               const PriorEvalOptions& options, std::size_t repeats, std::uint64_t seed);

std::string posthoc_rows_csv(const PosthocReport& report);
std::string posthoc_summary_csv(const PosthocReport& report);

struct MultiRestartResult {
    std::vector<TrialRecord> trials;            ///< all restarts, group = restart
    std::vector<std::size_t> best_per_restart;  ///< positions in `trials`
    std::vector<std::size_t> pareto;            ///< positions in `trials`
};

/// Independent TPE runs seeded derive_seed(master_seed, r); trial indices run
/// consecutively across restarts.
MultiRestartResult multi_restart_tpe(const Objective& objective, const SearchSpace& space, std::size_t restarts,
                                     std::size_t trials_per, std::uint64_t master_seed, std::size_t n_startup = 10,
                                     const TrialObserver& observer = {});

/// Successful trials not dominated in (recall, precision), both maximised.
std::vector<std::size_t> pareto_front(const std::vector<TrialRecord>& trials);

} // namespace tabaudit
