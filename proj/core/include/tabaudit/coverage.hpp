#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/matrix.hpp"

namespace tabaudit {

enum class Normalization { JointMinMax, None };

struct CoverageParams {
    std::size_t k = 5;
    double threshold_percentile = 95.0;
    Normalization normalize = Normalization::JointMinMax;

    /// Throws DomainError unless k >= 1 and percentile in (0, 100].
    void validate() const;
};

/// Two-directional k-NN coverage of A and B.
///
/// recall    = share of A-points whose mean k-NN distance into B is <= delta,
///             delta being the threshold computed within B;
/// precision = share of B-points whose mean k-NN distance into A is <= delta_precision,
///             delta_precision being the threshold computed within A.
struct CoverageReport {
    double recall = 0.0;
    double precision = 0.0;
    double delta = 0.0;           ///< threshold within B (used for recall)
    double delta_precision = 0.0; ///< threshold within A (used for precision)
    std::size_t k = 0;
    double percentile = 0.0;
    double uncovered_fraction = 0.0; ///< 1 - recall
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    /// A and B were the same point set, so cross-set queries excluded the
    /// query's own row as within-set queries do.
    bool self_comparison = false;
    std::vector<double> a_to_b; ///< mean k-NN distance of each A row into B
    std::vector<double> b_to_a;
};

/// Per-dimension min-max scaling over the union of A and B. Constant
/// dimensions map to 0.
std::pair<DenseMatrix, DenseMatrix> joint_normalize(const DenseMatrix& a, const DenseMatrix& b);
/// Same, after checking schema compatibility.
std::pair<FeatureMatrix, FeatureMatrix> joint_normalize(const FeatureMatrix& a, const FeatureMatrix& b);

double euclidean(std::span<const double> a, std::span<const double> b);

/// Mean Euclidean distance from p to its k nearest rows of Q. When
/// `self_row` is set that row of Q is skipped (p is Q's own member).
double knn_mean_dist(std::span<const double> p, const DenseMatrix& q, std::size_t k,
                     std::optional<std::size_t> self_row = std::nullopt);

/// knn_mean_dist for every row of P. `within` means P and Q are the same set
/// and row i skips itself.
std::vector<double> knn_mean_dists(const DenseMatrix& p, const DenseMatrix& q, std::size_t k, bool within,
                                   unsigned workers = 1);

/// Inclusive linear-interpolation percentile (pct in [0, 100]).
double percentile_linear(std::vector<double> values, double pct);

/// Percentile of within-set mean k-NN distances of Q. Requires |Q| >= k+1.
double coverage_threshold(const DenseMatrix& q, const CoverageParams& params, unsigned workers = 1);

CoverageReport coverage_pair(const DenseMatrix& a, const DenseMatrix& b, const CoverageParams& params,
                             unsigned workers = 1);
CoverageReport coverage_pair(const FeatureMatrix& a, const FeatureMatrix& b, const CoverageParams& params,
                             unsigned workers = 1);

struct AblationCell {
    std::size_t k = 0;
    double percentile = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double delta = 0.0;
    double delta_precision = 0.0;
};

/// Grid of coverage results over every (k, percentile), k-major order.
std::vector<AblationCell> ablation_sweep(const DenseMatrix& a, const DenseMatrix& b,
                                         const std::vector<std::size_t>& k_values,
                                         const std::vector<double>& percentiles,
                                         Normalization normalize = Normalization::JointMinMax,
                                         unsigned workers = 1);
std::vector<AblationCell> ablation_sweep(const FeatureMatrix& a, const FeatureMatrix& b,
                                         const std::vector<std::size_t>& k_values,
                                         const std::vector<double>& percentiles,
                                         Normalization normalize = Normalization::JointMinMax,
                                         unsigned workers = 1);

/// Long-format CSV: k,percentile,recall,precision,delta,delta_precision
std::string ablation_to_csv(const std::vector<AblationCell>& cells);

} // namespace tabaudit
