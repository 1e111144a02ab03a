#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/gbdt.hpp"

namespace tabaudit {

/// Rows of two populations stacked; label 1 marks the first ("real") one.
struct LabeledFeatureSet {
    DenseMatrix x;
    std::vector<int> y;

    static LabeledFeatureSet stack(const DenseMatrix& first, const DenseMatrix& second);
};

/// Mann-Whitney AUC via midranks; ties count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

struct StratifiedSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffle, round(test_fraction * class size) rows of each class go
/// to test. Both index lists come back sorted.
StratifiedSplit stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

struct AucReport {
    double mean_auc = 0.0;
    double std_auc = 0.0; ///< population standard deviation over repetitions
    std::size_t n_bootstrap = 0;
    std::vector<double> per_rep_auc;
};

inline constexpr std::size_t kDefaultBootstraps = 200;
inline constexpr std::size_t kMinRowsPerPopulation = 20;

/// Repeated stratified 80/20 splits of A (label 1) against B (label 0); each
/// repetition fits a fresh ensemble and scores held-out AUC. Repetition r uses
/// derive_seed(seed, r), so results do not depend on `workers`.
AucReport bootstrap_auc(const DenseMatrix& a, const DenseMatrix& b, const GbdtParams& params,
                        std::size_t n_boot, std::uint64_t seed, unsigned workers = 1);
AucReport bootstrap_auc(const FeatureMatrix& a, const FeatureMatrix& b, const GbdtParams& params,
                        std::size_t n_boot, std::uint64_t seed, unsigned workers = 1);

/// Summarise a list of AUC values.
AucReport summarize_auc(std::vector<double> per_rep);

/// Fit once on all of A and B and return the normalised split gains.
std::vector<double> discriminator_importance(const FeatureMatrix& a, const FeatureMatrix& b,
                                             const GbdtParams& params, std::uint64_t seed);

/// CSV: feature,gain_share
std::string importance_to_csv(const std::vector<std::string>& names, const std::vector<double>& shares);

} // namespace tabaudit
