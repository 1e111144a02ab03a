#include "tabaudit/coverage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

namespace {

/// Sorted ascending distances from p to its `count` nearest rows of q.
std::vector<double> nearest(std::span<const double> p, const DenseMatrix& q, std::size_t count,
                            std::optional<std::size_t> self_row) {
    std::vector<double> d;
    d.reserve(q.rows());
    for (std::size_t j = 0; j < q.rows(); ++j) {
        if (self_row && *self_row == j) {
            continue;
        }
        d.push_back(euclidean(p, q.row(j)));
    }
    if (d.size() < count) {
        throw DomainError("k-NN: " + std::to_string(count) + " neighbours requested but only " +
                          std::to_string(d.size()) + " available");
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(count), d.end());
    d.resize(count);
    return d;
}

double prefix_mean(const std::vector<double>& sorted, std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        s += sorted[i];
    }
    return s / static_cast<double>(k);
}

std::vector<std::vector<double>> nearest_all(const DenseMatrix& p, const DenseMatrix& q, std::size_t count,
                                             bool within, unsigned workers) {
    std::vector<std::vector<double>> out(p.rows());
    parallel_for(p.rows(), workers, [&](std::size_t i) {
        out[i] = nearest(p.row(i), q, count, within ? std::optional<std::size_t>(i) : std::nullopt);
    });
    return out;
}

double covered_share(const std::vector<double>& dists, double delta) {
    const auto covered = std::count_if(dists.begin(), dists.end(), [delta](double d) { return d <= delta; });
    return static_cast<double>(covered) / static_cast<double>(dists.size());
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

void CoverageParams::validate() const {
    if (k < 1) {
        throw DomainError("coverage: k must be >= 1");
    }
    if (!(threshold_percentile > 0.0 && threshold_percentile <= 100.0)) {
        throw DomainError("coverage: percentile must lie in (0, 100]");
    }
}

std::pair<DenseMatrix, DenseMatrix> joint_normalize(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) {
        throw DomainError("joint_normalize: dimension mismatch");
    }
    const std::size_t d = a.cols();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const DenseMatrix* m : {&a, &b}) {
        for (std::size_t i = 0; i < m->rows(); ++i) {
            auto r = m->row(i);
            for (std::size_t j = 0; j < d; ++j) {
                lo[j] = std::min(lo[j], r[j]);
                hi[j] = std::max(hi[j], r[j]);
            }
        }
    }
    auto scale = [&](const DenseMatrix& m) {
        DenseMatrix out(m.rows(), d);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            auto src = m.row(i);
            auto dst = out.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double range = hi[j] - lo[j];
                dst[j] = range > 0.0 ? (src[j] - lo[j]) / range : 0.0;
            }
        }
        return out;
    };
    return {scale(a), scale(b)};
}

std::pair<FeatureMatrix, FeatureMatrix> joint_normalize(const FeatureMatrix& a, const FeatureMatrix& b) {
    require_compatible(a, b);
    auto [na, nb] = joint_normalize(a.values, b.values);
    FeatureMatrix fa = a;
    FeatureMatrix fb = b;
    fa.values = std::move(na);
    fb.values = std::move(nb);
    return {std::move(fa), std::move(fb)};
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::sqrt(s);
}

double knn_mean_dist(std::span<const double> p, const DenseMatrix& q, std::size_t k,
                     std::optional<std::size_t> self_row) {
    if (k < 1) {
        throw DomainError("knn_mean_dist: k must be >= 1");
    }
    if (p.size() != q.cols()) {
        throw DomainError("knn_mean_dist: dimension mismatch");
    }
    return prefix_mean(nearest(p, q, k, self_row), k);
}

std::vector<double> knn_mean_dists(const DenseMatrix& p, const DenseMatrix& q, std::size_t k, bool within,
                                   unsigned workers) {
    if (p.cols() != q.cols()) {
        throw DomainError("knn_mean_dists: dimension mismatch");
    }
    if (within && p.rows() != q.rows()) {
        throw DomainError("knn_mean_dists: within-set query needs P == Q");
    }
    auto sorted = nearest_all(p, q, k, within, workers);
    std::vector<double> out(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        out[i] = prefix_mean(sorted[i], k);
    }
    return out;
}

double percentile_linear(std::vector<double> values, double pct) {
    if (values.empty()) {
        throw DomainError("percentile_linear: no values");
    }
    if (!(pct >= 0.0 && pct <= 100.0)) {
        throw DomainError("percentile_linear: pct outside [0, 100]");
    }
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double coverage_threshold(const DenseMatrix& q, const CoverageParams& params, unsigned workers) {
    params.validate();
    if (q.rows() < params.k + 1) {
        throw DomainError("coverage_threshold: needs at least k+1 rows");
    }
    return percentile_linear(knn_mean_dists(q, q, params.k, true, workers), params.threshold_percentile);
}

CoverageReport coverage_pair(const DenseMatrix& a_in, const DenseMatrix& b_in, const CoverageParams& params,
                             unsigned workers) {
    params.validate();
    if (a_in.cols() != b_in.cols()) {
        throw DomainError("coverage_pair: dimension mismatch");
    }
    if (a_in.rows() < params.k + 1 || b_in.rows() < params.k + 1) {
        throw DomainError("coverage_pair: both sets need at least k+1 rows");
    }
    DenseMatrix a, b;
    if (params.normalize == Normalization::JointMinMax) {
        std::tie(a, b) = joint_normalize(a_in, b_in);
    } else {
        a = a_in;
        b = b_in;
    }
    const bool same = a_in == b_in;

    CoverageReport rep;
    rep.k = params.k;
    rep.percentile = params.threshold_percentile;
    rep.n_a = a.rows();
    rep.n_b = b.rows();
    rep.self_comparison = same;

    const auto within_a = knn_mean_dists(a, a, params.k, true, workers);
    const auto within_b = same ? within_a : knn_mean_dists(b, b, params.k, true, workers);
    rep.delta = percentile_linear(within_b, params.threshold_percentile);
    rep.delta_precision = percentile_linear(within_a, params.threshold_percentile);
    rep.a_to_b = same ? within_a : knn_mean_dists(a, b, params.k, false, workers);
    rep.b_to_a = same ? within_b : knn_mean_dists(b, a, params.k, false, workers);
    rep.recall = covered_share(rep.a_to_b, rep.delta);
    rep.precision = covered_share(rep.b_to_a, rep.delta_precision);
    rep.uncovered_fraction = 1.0 - rep.recall;
    return rep;
}

CoverageReport coverage_pair(const FeatureMatrix& a, const FeatureMatrix& b, const CoverageParams& params,
                             unsigned workers) {
    require_compatible(a, b);
    return coverage_pair(a.values, b.values, params, workers);
}

std::vector<AblationCell> ablation_sweep(const DenseMatrix& a_in, const DenseMatrix& b_in,
                                         const std::vector<std::size_t>& k_values,
                                         const std::vector<double>& percentiles, Normalization normalize,
                                         unsigned workers) {
    if (k_values.empty() || percentiles.empty()) {
        throw DomainError("ablation_sweep: empty k or percentile list");
    }
    for (auto k : k_values) {
        for (double p : percentiles) {
            CoverageParams{k, p, normalize}.validate();
        }
    }
    const std::size_t k_max = *std::max_element(k_values.begin(), k_values.end());
    if (k_max + 1 > std::min(a_in.rows(), b_in.rows())) {
        throw DomainError("ablation_sweep: max(k)+1 exceeds the smaller set");
    }
    if (a_in.cols() != b_in.cols()) {
        throw DomainError("ablation_sweep: dimension mismatch");
    }
    DenseMatrix a, b;
    if (normalize == Normalization::JointMinMax) {
        std::tie(a, b) = joint_normalize(a_in, b_in);
    } else {
        a = a_in;
        b = b_in;
    }
    const bool same = a_in == b_in;
    const auto near_aa = nearest_all(a, a, k_max, true, workers);
    const auto near_bb = same ? near_aa : nearest_all(b, b, k_max, true, workers);
    const auto near_ab = same ? near_aa : nearest_all(a, b, k_max, false, workers);
    const auto near_ba = same ? near_bb : nearest_all(b, a, k_max, false, workers);

    auto means = [](const std::vector<std::vector<double>>& sorted, std::size_t k) {
        std::vector<double> out(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            out[i] = prefix_mean(sorted[i], k);
        }
        return out;
    };

    std::vector<AblationCell> cells;
    for (auto k : k_values) {
        const auto wa = means(near_aa, k);
        const auto wb = means(near_bb, k);
        const auto ab = means(near_ab, k);
        const auto ba = means(near_ba, k);
        for (double p : percentiles) {
            AblationCell cell;
            cell.k = k;
            cell.percentile = p;
            cell.delta = percentile_linear(wb, p);
            cell.delta_precision = percentile_linear(wa, p);
            cell.recall = covered_share(ab, cell.delta);
            cell.precision = covered_share(ba, cell.delta_precision);
            cells.push_back(cell);
        }
    }
    return cells;
}

std::vector<AblationCell> ablation_sweep(const FeatureMatrix& a, const FeatureMatrix& b,
                                         const std::vector<std::size_t>& k_values,
                                         const std::vector<double>& percentiles, Normalization normalize,
                                         unsigned workers) {
    require_compatible(a, b);
    return ablation_sweep(a.values, b.values, k_values, percentiles, normalize, workers);
}

std::string ablation_to_csv(const std::vector<AblationCell>& cells) {
    std::string out = "k,percentile,recall,precision,delta,delta_precision\n";
    for (const auto& c : cells) {
        out += std::to_string(c.k) + "," + fmt(c.percentile) + "," + fmt(c.recall) + "," + fmt(c.precision) +
               "," + fmt(c.delta) + "," + fmt(c.delta_precision) + "\n";
    }
    return out;
}

} // namespace tabaudit
