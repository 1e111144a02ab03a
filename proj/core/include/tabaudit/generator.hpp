#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabaudit/corpus.hpp"
#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/prior_config.hpp"
#include "tabaudit/scm.hpp"
#include "tabaudit/table.hpp"

namespace tabaudit {

/// `n_cols` counts the trailing target column.
struct GenerationRequest {
    PriorConfig theta;
    std::size_t n_rows = 256;
    std::size_t n_cols = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr std::size_t kMaxCategoricalLevels = 12;

/// Graph the request's seed produces, before evaluation.
ScmGraph build_scm(const GenerationRequest& req, Rng& rng);

/// Discretise target-node values into classes 0..c-1. Exposed for testing.
std::vector<int> discretize_target(const std::vector<double>& values,
                                   const std::vector<std::vector<double>>& context, int n_classes, bool ordered,
                                   bool balanced, Rng& rng);

/// Quantile-bin `values` into `levels` codes by rank (ties broken by index).
std::vector<double> quantile_codes(const std::vector<double>& values, std::size_t levels);

/// Columns f0..f{n_cols-2} and a final "target" column.
Table generate_table(const GenerationRequest& req, std::string source_id = "synthetic");

/// Draws column counts from an observed multiset.
class ColumnCountSampler {
public:
    explicit ColumnCountSampler(std::vector<std::size_t> counts);
    /// Uses coordinate 0 (table column count) of a full-schema matrix.
    static ColumnCountSampler from_features(const FeatureMatrix& full);
    static ColumnCountSampler constant(std::size_t n_cols) { return ColumnCountSampler({n_cols}); }

    std::size_t operator()(Rng& rng) const;
    [[nodiscard]] std::size_t min() const noexcept { return min_; }
    [[nodiscard]] std::size_t max() const noexcept { return max_; }
    [[nodiscard]] const std::vector<std::size_t>& counts() const noexcept { return counts_; }

private:
    std::vector<std::size_t> counts_;
    std::size_t min_ = 0;
    std::size_t max_ = 0;
};

/// Log-uniform integer row counts in [lo, hi].
class RowCountSampler {
public:
    RowCountSampler(std::size_t lo = 64, std::size_t hi = 1024);
    std::size_t operator()(Rng& rng) const;
    [[nodiscard]] std::size_t lo() const noexcept { return lo_; }
    [[nodiscard]] std::size_t hi() const noexcept { return hi_; }

private:
    std::size_t lo_;
    std::size_t hi_;
};

struct ReplayOptions {
    std::size_t small_rows = 256;   ///< tables below this size may be replayed
    double probability = 0.25;      ///< chance a slot replays instead of drawing fresh
};

struct CorpusGenerationStats {
    std::size_t fresh = 0;
    std::size_t replayed = 0;
};

/// n_tables synthetic tables. Slot i draws its sizes and replay decision from
/// derive_seed(master_seed, i); tables are named syn_00000, syn_00001, ...
/// With replay_small set, a replaying slot resamples (with replacement) the
/// rows of a fresh small table from an earlier slot; with none available it
/// draws fresh. The output does not depend on `workers`.
CorpusHandle generate_corpus(const PriorConfig& theta, std::size_t n_tables, const ColumnCountSampler& cols,
                             const RowCountSampler& rows, std::uint64_t master_seed, unsigned workers = 1,
                             const ReplayOptions& replay = {}, CorpusGenerationStats* stats = nullptr);

} // namespace tabaudit
