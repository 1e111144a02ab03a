#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tabaudit/matrix.hpp"

namespace tabaudit {

struct GbdtParams {
    std::size_t n_trees = 300;
    std::size_t max_depth = 6;
    double learning_rate = 0.1;
    std::size_t min_samples_leaf = 5;
    std::size_t feature_bins = 256;
    double l2 = 1.0;
    /// Row subsampling per tree; 1 disables it and makes the seed irrelevant.
    double subsample = 1.0;

    void validate() const;

    /// Tree budget used while scoring many prior configurations.
    static GbdtParams grid_mode() {
        GbdtParams p;
        p.n_trees = 100;
        return p;
    }
};

struct TreeNode {
    // Internal: feature >= 0, rows with x[feature] <= threshold go to `left`.
    // Leaf: feature == -1, `value` is the margin contribution.
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] double predict(std::span<const double> x) const;
};

/// Binary logistic-loss boosted tree ensemble.
class GbdtModel {
public:
    GbdtModel() = default;
    GbdtModel(std::size_t n_features, double base_margin, std::vector<Tree> trees, std::vector<double> gains);

    [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }
    [[nodiscard]] std::size_t n_trees() const noexcept { return trees_.size(); }
    [[nodiscard]] const std::vector<Tree>& trees() const noexcept { return trees_; }
    [[nodiscard]] double base_margin() const noexcept { return base_margin_; }

    /// Margin after the first `n_stages` trees (all trees by default).
    [[nodiscard]] double predict_margin(std::span<const double> x, std::size_t n_stages = SIZE_MAX) const;
    [[nodiscard]] double predict_proba(std::span<const double> x) const;
    [[nodiscard]] std::vector<double> predict_proba(const DenseMatrix& x) const;

    /// Split gain per feature, normalised to sum 1 (all zero if no split was made).
    [[nodiscard]] std::vector<double> feature_importance() const;
    [[nodiscard]] const std::vector<double>& raw_gains() const noexcept { return gains_; }

private:
    std::size_t n_features_ = 0;
    double base_margin_ = 0.0;
    std::vector<Tree> trees_;
    std::vector<double> gains_;
};

/// Histogram cut points for one feature: sorted, strictly increasing, at most
/// max_bins - 1 of them. A value falls in bin b when cuts[b-1] < x <= cuts[b].
std::vector<double> feature_cuts(std::vector<double> values, std::size_t max_bins);

/// Fit on rows of `x` with labels in {0, 1}. Throws DomainError for empty or
/// single-class input.
GbdtModel fit_gbdt(const DenseMatrix& x, std::span<const int> y, const GbdtParams& params, std::uint64_t seed);

double log_loss(std::span<const double> probabilities, std::span<const int> y);

} // namespace tabaudit
