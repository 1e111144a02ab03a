#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabaudit/coverage.hpp"
#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/stats.hpp"
#include "tabaudit/table.hpp"

namespace tabaudit {

/// Per-dataset metric of every model; one model is the one under study.
struct PerformanceTable {
    std::vector<std::string> models;
    std::vector<std::string> ids;
    DenseMatrix values; ///< ids x models
    std::string target;

    [[nodiscard]] std::size_t target_index() const;

    /// CSV: first column dataset id, then one column per model. Throws
    /// InputError for a missing target, empty or non-numeric cells, or values
    /// outside [0, 1].
    static PerformanceTable from_csv(std::string_view text, const std::string& target);
};

/// Rank of `target` by descending metric (1 = best); ties share the average rank.
double model_rank(std::span<const double> metrics, std::size_t target);
/// target / mean(others) (others include the target when exclude_target is false).
double relative_auc_mean(std::span<const double> metrics, std::size_t target, bool exclude_target = true);
/// target / max(others).
double relative_auc_best(std::span<const double> metrics, std::size_t target, bool exclude_target = true);

enum class PerformanceMetric { Rank, RelativeMean, RelativeBest };
std::string_view to_string(PerformanceMetric m) noexcept;
inline constexpr PerformanceMetric kPerformanceMetrics[] = {PerformanceMetric::Rank, PerformanceMetric::RelativeMean,
                                                            PerformanceMetric::RelativeBest};

/// One value per dataset row.
std::vector<double> performance_metric(const PerformanceTable& table, PerformanceMetric metric,
                                       bool exclude_target = true);

/// Mean k-NN distance of every benchmark row into the reference set, after
/// joint min-max normalisation. No self-exclusion.
std::vector<double> proximity_scores(const FeatureMatrix& bench, const FeatureMatrix& reference, std::size_t k = 5);

/// Dataset key of a source id: file name without directories or extension.
std::string dataset_key(const std::string& source_id);

struct DatasetProximity {
    std::vector<std::string> ids; ///< first-appearance order
    std::vector<double> distance; ///< mean over the dataset's rows
};

/// proximity_scores averaged per dataset key (per-column schemas yield
/// several rows per dataset).
DatasetProximity dataset_proximity(const FeatureMatrix& bench, const FeatureMatrix& reference, std::size_t k = 5);

/// Dataset-level covariates. `full_observed` holds when the table has no
/// missing cells and at least one magnitude column.
struct TableCovariates {
    double n_rows = 0.0;
    double n_cols = 0.0;
    double class_balance = 0.0; ///< minority / majority count of the last column
    double skewness = 0.0;
    double kurtosis = 0.0;
    double categorical_ratio = 0.0;
    bool full_observed = false;
};

/// Minority-to-majority class count ratio of a label column.
double class_balance(const Column& label);
TableCovariates table_covariates(const Table& table);

/// "↑" or "↓". Rank falls as performance improves, so its sign is flipped.
std::string direction_tag(double r, PerformanceMetric metric);

struct CorrelationCell {
    std::string schema;
    PerformanceMetric metric = PerformanceMetric::Rank;
    std::string covariate_set; ///< "none", "universal" or "full"
    CorrelationReport report;
    std::string direction;
    bool computed = false; ///< false when the correlation is undefined
    std::string note;
};

struct ScatterPoint {
    std::string schema;
    std::string id;
    double distance = 0.0;
    double rank = 0.0;
    double relative_mean = 0.0;
    double relative_best = 0.0;
};

struct SchemaSummary {
    std::string schema;
    std::size_t n_datasets = 0;
    double recall = 0.0;    ///< benchmark rows covered by the reference
    double precision = 0.0; ///< reference rows covered by the benchmark
};

struct ProximityReport {
    std::vector<SchemaSummary> schemas;
    std::vector<CorrelationCell> cells;
    std::vector<ScatterPoint> scatter;
    std::vector<std::string> unmatched_performance;
    std::vector<std::string> unmatched_features;
    double match_fraction = 0.0;
    bool exclude_target = true;
    double detectable_r = 0.0; ///< at the matched sample size, power 0.8, alpha 0.05
};

struct AnalysisInput {
    PerformanceTable performance;
    /// schema name -> (benchmark features, reference features)
    std::vector<std::pair<FeatureMatrix, FeatureMatrix>> features;
    /// dataset key -> covariates; empty disables partial correlations
    std::map<std::string, TableCovariates> covariates;
    std::size_t k = 5;
    double min_match = 0.8;
    bool exclude_target = true;
};

/// For each schema: proximity of every benchmark dataset, then correlations
/// with each performance metric, plain and per covariate set. Throws
/// InputError when fewer than min_match of the performance ids join.
ProximityReport proximity_performance_report(const AnalysisInput& input);

/// Flat table: schema,covariates,metric,r,p,n,df,direction,computed,note
std::string correlation_cells_csv(const ProximityReport& report);
/// schema,id,distance,rank,relative_mean,relative_best
std::string scatter_csv(const ProximityReport& report);

} // namespace tabaudit
