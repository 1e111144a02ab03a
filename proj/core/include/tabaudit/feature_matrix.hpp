#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tabaudit/corpus.hpp"
#include "tabaudit/features.hpp"
#include "tabaudit/matrix.hpp"

namespace tabaudit {

/// Feature rows of one schema, with the origin of each row.
struct FeatureMatrix {
    SchemaId schema = SchemaId::Full;
    std::string version{kFeatureVersion};
    DenseMatrix values;
    std::vector<FeatureOrigin> origins;

    [[nodiscard]] std::size_t rows() const noexcept { return values.rows(); }
    [[nodiscard]] std::size_t dim() const noexcept { return values.cols(); }

    /// Rows at `indices`, in that order.
    [[nodiscard]] FeatureMatrix select(const std::vector<std::size_t>& indices) const;

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Throws DomainError unless both matrices share schema, version and width.
void require_compatible(const FeatureMatrix& a, const FeatureMatrix& b);

struct FeaturizeReport {
    std::size_t tables_attempted = 0;
    std::vector<SkippedEntry> skipped;
};

/// Maximum share of tables that may be skipped before featurize_corpus fails.
inline constexpr double kMaxSkipFraction = 0.10;

/// One row per table (per magnitude column for ColHists) in manifest order.
/// Tables that fail to load or featurize are skipped and reported; more than
/// 10% skipped (counting files the corpus scan already rejected) throws.
FeatureMatrix featurize_corpus(const CorpusHandle& corpus, SchemaId schema, const FeatureOptions& options = {},
                               unsigned workers = 1, FeaturizeReport* report = nullptr);

/// Binary layout (little-endian):
///   "TABFEAT1"  u32 len + schema name  u32 len + version  u64 dim  u64 rows
///   rows*dim f64 (row-major)  then per row: u32 len + source_id, i64 column.
void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

std::string serialize_feature_matrix(const FeatureMatrix& m);
FeatureMatrix deserialize_feature_matrix(const std::string& bytes);

/// CSV export: source_id,column,<feature names...>
std::string feature_matrix_to_csv(const FeatureMatrix& m);

} // namespace tabaudit
