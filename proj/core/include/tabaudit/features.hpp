#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabaudit/table.hpp"

namespace tabaudit {

enum class SchemaId { Full, Scalars, Histograms, ColHists, CorrHists };

/// Registered feature schema. `bins` is the histogram resolution the schema
/// uses (0 for Scalars).
struct FeatureSchema {
    SchemaId id;
    std::string_view name;
    std::size_t dim;
    std::size_t bins;
    bool per_column; ///< one row per numeric column instead of per table
};

inline constexpr std::size_t kHistogramBins = 30;
inline constexpr std::size_t kColumnHistogramBins = 50;
inline constexpr std::size_t kCorrelationBins = 50;
inline constexpr double kHighCorrelation = 0.7;

/// Version tag written into every feature file.
inline constexpr std::string_view kFeatureVersion = "tabaudit-features/1";

const FeatureSchema& schema_info(SchemaId id);
std::optional<SchemaId> parse_schema(std::string_view name);
std::vector<SchemaId> all_schemas();

/// The ten table-level scalar summaries. Nine of them form the Scalars vector;
/// which one is left out is configurable (skewness_std by default).
enum class ScalarField {
    CategoricalRatio,
    MeanCatCardinality,
    MaxCatCardinality,
    MeanSkewness,
    SkewnessStd,
    MeanKurtosis,
    MeanCatEntropy,
    MeanAbsCorr,
    StdAbsCorr,
    PropHighCorr,
};
inline constexpr std::size_t kScalarFieldCount = 10;

std::string_view to_string(ScalarField field) noexcept;
std::optional<ScalarField> parse_scalar_field(std::string_view name);

struct ScalarFeatures {
    double n_cols = 0.0;
    double categorical_ratio = 0.0;
    double mean_cat_cardinality = 0.0;
    double max_cat_cardinality = 0.0;
    double mean_skewness = 0.0;
    double skewness_std = 0.0;
    double mean_kurtosis = 0.0;
    double mean_cat_entropy = 0.0; ///< nats
    double mean_abs_corr = 0.0;
    double std_abs_corr = 0.0;
    double prop_high_corr = 0.0;

    [[nodiscard]] double get(ScalarField field) const noexcept;
};

struct FeatureOptions {
    ScalarField dropped_scalar = ScalarField::SkewnessStd;

    /// Version string including any non-default option, so feature files built
    /// under different options refuse to mix.
    [[nodiscard]] std::string version() const;
};

/// Origin of a feature row: table id, plus column index for per-column schemas.
struct FeatureOrigin {
    std::string source_id;
    long column = -1;

    friend bool operator==(const FeatureOrigin&, const FeatureOrigin&) = default;
};

struct FeatureVector {
    SchemaId schema;
    std::vector<double> values;
    FeatureOrigin origin;
};

/// Column summary helpers shared with the analysis covariates.
struct ColumnMoments {
    double mean = 0.0;
    double variance = 0.0; ///< population
    double skewness = 0.0; ///< population, 0 when variance is 0
    double excess_kurtosis = 0.0;
};
ColumnMoments column_moments(std::vector<double> values);

/// Shannon entropy (nats) of the empirical distribution given by counts.
double entropy_nats(const std::vector<std::size_t>& counts);

/// Sum whose result is independent of the order of `values` (sorted before adding).
double order_invariant_sum(std::vector<double> values);

/// True for columns that take part in moment, histogram and correlation
/// features: numeric kind, Number storage, at least one present value.
bool is_magnitude_column(const Column& column);

/// |Pearson r| for every pair of magnitude columns with at least 3 pairwise
/// complete rows and non-zero variance on those rows. Sorted ascending.
std::vector<double> absolute_correlations(const Table& table);

ScalarFeatures scalar_features(const Table& table);

/// Nine-value Scalars vector in ScalarField order minus the dropped field.
std::vector<double> scalar_vector(const ScalarFeatures& s, const FeatureOptions& options = {});

/// Cumulative histogram of min-max normalised values; final entry is 1.
/// Throws DomainError when `values` is empty.
std::vector<double> cumulative_histogram(const std::vector<double>& values, std::size_t bins);

/// cumulative_histogram over the column's present values. Throws DomainError
/// for token columns or columns with no present value.
std::vector<double> cumulative_column_histogram(const Column& column, std::size_t bins = kColumnHistogramBins);

/// Bin-wise mean then bin-wise population std of the cumulative histograms of
/// all magnitude columns (2 * bins values). All zeros without such columns.
std::vector<double> table_histogram_features(const Table& table, std::size_t bins = kHistogramBins);

/// Normalised histogram of absolute correlations on [0, 1]; all zeros when no
/// pair qualifies.
std::vector<double> correlation_histogram(const Table& table, std::size_t bins = kCorrelationBins);

/// [n_cols] ++ scalar_vector ++ table_histogram_features: 70 values.
FeatureVector full_features(const Table& table, const FeatureOptions& options = {});

/// All rows a schema produces for one table (several for ColHists, possibly none).
std::vector<FeatureVector> table_features(SchemaId schema, const Table& table, const FeatureOptions& options = {});

/// Human-readable names of each coordinate of a schema.
std::vector<std::string> feature_names(SchemaId schema, const FeatureOptions& options = {});

} // namespace tabaudit
