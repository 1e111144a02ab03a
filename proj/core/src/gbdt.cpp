#include "tabaudit/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

namespace {

struct HistBin {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t n = 0;
};

struct BinnedData {
    std::size_t rows = 0;
    std::vector<std::vector<double>> cuts;
    std::vector<std::uint8_t> bins; // feature-major: bins[j * rows + i]
    std::vector<std::size_t> offset;
    std::size_t total_bins = 0;

    BinnedData(const DenseMatrix& x, std::size_t max_bins) : rows(x.rows()) {
        const std::size_t f = x.cols();
        cuts.resize(f);
        bins.resize(f * rows);
        offset.resize(f);
        std::vector<double> col(rows);
        for (std::size_t j = 0; j < f; ++j) {
            for (std::size_t i = 0; i < rows; ++i) {
                col[i] = x(i, j);
            }
            cuts[j] = feature_cuts(col, max_bins);
            offset[j] = total_bins;
            total_bins += cuts[j].size() + 1;
            auto* dst = &bins[j * rows];
            for (std::size_t i = 0; i < rows; ++i) {
                const auto it = std::lower_bound(cuts[j].begin(), cuts[j].end(), col[i]);
                dst[i] = static_cast<std::uint8_t>(it - cuts[j].begin());
            }
        }
    }

    [[nodiscard]] std::size_t n_bins(std::size_t j) const { return cuts[j].size() + 1; }
};

struct Split {
    std::int32_t feature = -1;
    std::size_t bin = 0;
    double gain = 0.0;
};

struct Pending {
    std::int32_t node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    double g = 0.0;
    double h = 0.0;
    std::vector<HistBin> hist;
    // Rows whose bins may be non-zero in `hist`; used to clear it for reuse.
    std::size_t hist_begin = 0;
    std::size_t hist_end = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const BinnedData& data, const GbdtParams& params, const std::vector<double>& grad,
                const std::vector<double>& hess, std::vector<double>& gains)
        : data_(data), params_(params), grad_(grad), hess_(hess), gains_(gains) {}

    Tree build(std::vector<std::uint32_t> rows) {
        rows_ = std::move(rows);
        Tree tree;
        tree.nodes.emplace_back();
        Pending root;
        root.node = 0;
        root.begin = 0;
        root.end = rows_.size();
        sums(root);
        fill_histogram(root);

        std::vector<Pending> level;
        level.push_back(std::move(root));
        for (std::size_t depth = 0; depth < params_.max_depth && !level.empty(); ++depth) {
            std::vector<Pending> next;
            for (auto& p : level) {
                const Split s = best_split(p);
                if (s.feature < 0) {
                    make_leaf(tree, p);
                    release(p);
                    continue;
                }
                gains_[static_cast<std::size_t>(s.feature)] += s.gain;
                const auto col = &data_.bins[static_cast<std::size_t>(s.feature) * data_.rows];
                const auto mid = std::stable_partition(
                    rows_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                    rows_.begin() + static_cast<std::ptrdiff_t>(p.end),
                    [&](std::uint32_t r) { return col[r] <= s.bin; });
                const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

                auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
                node.feature = s.feature;
                node.threshold = data_.cuts[static_cast<std::size_t>(s.feature)][s.bin];
                const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
                node.left = left_id;
                node.right = left_id + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();

                Pending left{left_id, p.begin, split_at, 0.0, 0.0, {}};
                Pending right{left_id + 1, split_at, p.end, 0.0, 0.0, {}};
                sums(left);
                sums(right);
                if (depth + 1 < params_.max_depth) {
                    Pending& small = (left.end - left.begin) <= (right.end - right.begin) ? left : right;
                    Pending& large = (&small == &left) ? right : left;
                    if (splittable(small)) {
                        fill_histogram(small);
                    }
                    if (splittable(large)) {
                        large.hist = std::move(p.hist);
                        large.hist_begin = p.hist_begin;
                        large.hist_end = p.hist_end;
                        subtract_rows(large.hist, small.begin, small.end);
                    }
                }
                release(p);
                next.push_back(std::move(left));
                next.push_back(std::move(right));
            }
            level = std::move(next);
        }
        for (auto& p : level) {
            make_leaf(tree, p);
            release(p);
        }
        return tree;
    }

private:
    void sums(Pending& p) const {
        double g = 0.0;
        double h = 0.0;
        for (std::size_t k = p.begin; k < p.end; ++k) {
            g += grad_[rows_[k]];
            h += hess_[rows_[k]];
        }
        p.g = g;
        p.h = h;
    }

    [[nodiscard]] bool splittable(const Pending& p) const {
        return p.end - p.begin >= 2 * params_.min_samples_leaf;
    }

    /// Pooled buffers are all-zero, so only the node's rows need adding.
    void fill_histogram(Pending& p) {
        if (pool_.empty()) {
            p.hist.assign(data_.total_bins, HistBin{});
        } else {
            p.hist = std::move(pool_.back());
            pool_.pop_back();
        }
        p.hist_begin = p.begin;
        p.hist_end = p.end;
        const std::size_t f = data_.cuts.size();
        for (std::size_t j = 0; j < f; ++j) {
            HistBin* base = p.hist.data() + data_.offset[j];
            const std::uint8_t* col = &data_.bins[j * data_.rows];
            for (std::size_t k = p.begin; k < p.end; ++k) {
                const auto r = rows_[k];
                HistBin& b = base[col[r]];
                b.g += grad_[r];
                b.h += hess_[r];
                ++b.n;
            }
        }
    }

    /// Parent histogram minus the rows [begin, end) of one child.
    void subtract_rows(std::vector<HistBin>& hist, std::size_t begin, std::size_t end) const {
        const std::size_t f = data_.cuts.size();
        for (std::size_t j = 0; j < f; ++j) {
            HistBin* base = hist.data() + data_.offset[j];
            const std::uint8_t* col = &data_.bins[j * data_.rows];
            for (std::size_t k = begin; k < end; ++k) {
                const auto r = rows_[k];
                HistBin& b = base[col[r]];
                b.g -= grad_[r];
                b.h -= hess_[r];
                --b.n;
            }
        }
    }

    void release(Pending& p) {
        if (p.hist.empty()) {
            return;
        }
        const std::size_t f = data_.cuts.size();
        for (std::size_t j = 0; j < f; ++j) {
            HistBin* base = p.hist.data() + data_.offset[j];
            const std::uint8_t* col = &data_.bins[j * data_.rows];
            for (std::size_t k = p.hist_begin; k < p.hist_end; ++k) {
                base[col[rows_[k]]] = HistBin{};
            }
        }
        pool_.push_back(std::move(p.hist));
        p.hist.clear();
    }

    Split best_split(const Pending& p) {
        Split best;
        const std::size_t n = p.end - p.begin;
        const std::size_t leaf_min = params_.min_samples_leaf;
        if (!splittable(p) || p.hist.empty()) {
            return best;
        }
        const double lambda = params_.l2;
        const double parent = p.g * p.g / (p.h + lambda);
        const std::size_t f = data_.cuts.size();
        for (std::size_t j = 0; j < f; ++j) {
            const HistBin* base = p.hist.data() + data_.offset[j];
            const std::size_t nb = data_.n_bins(j);
            double gl = 0.0;
            double hl = 0.0;
            std::size_t nl = 0;
            // Visits occupied bins in increasing order; returns false to stop.
            auto visit = [&](std::size_t b) {
                gl += base[b].g;
                hl += base[b].h;
                nl += base[b].n;
                if (nl < leaf_min) {
                    return true;
                }
                if (n - nl < leaf_min) {
                    return false;
                }
                const double gr = p.g - gl;
                const double hr = p.h - hl;
                const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                if (gain > best.gain + 1e-12) {
                    best.feature = static_cast<std::int32_t>(j);
                    best.bin = b;
                    best.gain = gain;
                }
                return true;
            };
            if (4 * n < nb) {
                // Few rows: list their bins instead of scanning every bin.
                const std::uint8_t* col = &data_.bins[j * data_.rows];
                occupied_.clear();
                for (std::size_t k = p.begin; k < p.end; ++k) {
                    occupied_.push_back(col[rows_[k]]);
                }
                std::sort(occupied_.begin(), occupied_.end());
                occupied_.erase(std::unique(occupied_.begin(), occupied_.end()), occupied_.end());
                for (auto b : occupied_) {
                    if (static_cast<std::size_t>(b) + 1 >= nb || !visit(b)) {
                        break;
                    }
                }
                continue;
            }
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                if (base[b].n == 0) {
                    continue; // same partition as the previous bin
                }
                if (!visit(b)) {
                    break;
                }
            }
        }
        return best;
    }

    void make_leaf(Tree& tree, const Pending& p) const {
        auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
        node.feature = -1;
        node.value = -p.g / (p.h + params_.l2) * params_.learning_rate;
    }

    const BinnedData& data_;
    const GbdtParams& params_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    std::vector<double>& gains_;
    std::vector<std::uint32_t> rows_;
    std::vector<std::vector<HistBin>> pool_;
    std::vector<std::uint8_t> occupied_;
};

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

} // namespace

void GbdtParams::validate() const {
    if (n_trees == 0 || max_depth == 0 || min_samples_leaf == 0) {
        throw DomainError("gbdt: n_trees, max_depth and min_samples_leaf must be positive");
    }
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw DomainError("gbdt: learning_rate must lie in (0, 1]");
    }
    if (feature_bins < 2 || feature_bins > 256) {
        throw DomainError("gbdt: feature_bins must lie in [2, 256]");
    }
    if (!(l2 >= 0.0)) {
        throw DomainError("gbdt: l2 must be non-negative");
    }
    if (!(subsample > 0.0 && subsample <= 1.0)) {
        throw DomainError("gbdt: subsample must lie in (0, 1]");
    }
}

double Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

GbdtModel::GbdtModel(std::size_t n_features, double base_margin, std::vector<Tree> trees, std::vector<double> gains)
    : n_features_(n_features), base_margin_(base_margin), trees_(std::move(trees)), gains_(std::move(gains)) {}

double GbdtModel::predict_margin(std::span<const double> x, std::size_t n_stages) const {
    if (x.size() != n_features_) {
        throw DomainError("gbdt predict: expected " + std::to_string(n_features_) + " features");
    }
    double m = base_margin_;
    const std::size_t stop = std::min(n_stages, trees_.size());
    for (std::size_t t = 0; t < stop; ++t) {
        m += trees_[t].predict(x);
    }
    return m;
}

double GbdtModel::predict_proba(std::span<const double> x) const { return sigmoid(predict_margin(x)); }

std::vector<double> GbdtModel::predict_proba(const DenseMatrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out[i] = predict_proba(x.row(i));
    }
    return out;
}

std::vector<double> GbdtModel::feature_importance() const {
    std::vector<double> out(gains_.size(), 0.0);
    const double total = std::accumulate(gains_.begin(), gains_.end(), 0.0);
    if (total > 0.0) {
        for (std::size_t j = 0; j < gains_.size(); ++j) {
            out[j] = gains_[j] / total;
        }
    }
    return out;
}

std::vector<double> feature_cuts(std::vector<double> values, std::size_t max_bins) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> cuts;
    if (values.size() <= 1) {
        return cuts;
    }
    if (values.size() <= max_bins) {
        cuts.assign(values.begin(), values.end() - 1);
        return cuts;
    }
    const std::size_t n = values.size();
    for (std::size_t q = 1; q < max_bins; ++q) {
        const double c = values[q * n / max_bins - 1];
        if (cuts.empty() || c > cuts.back()) {
            cuts.push_back(c);
        }
    }
    if (!cuts.empty() && cuts.back() >= values.back()) {
        cuts.pop_back();
    }
    return cuts;
}

GbdtModel fit_gbdt(const DenseMatrix& x, std::span<const int> y, const GbdtParams& params, std::uint64_t seed) {
    params.validate();
    const std::size_t n = x.rows();
    if (n == 0 || x.cols() == 0) {
        throw DomainError("fit_gbdt: empty input");
    }
    if (y.size() != n) {
        throw DomainError("fit_gbdt: label count does not match rows");
    }
    std::size_t positives = 0;
    for (int v : y) {
        if (v != 0 && v != 1) {
            throw DomainError("fit_gbdt: labels must be 0 or 1");
        }
        positives += static_cast<std::size_t>(v);
    }
    if (positives == 0 || positives == n) {
        throw DomainError("fit_gbdt: both classes must be present");
    }

    const BinnedData data(x, params.feature_bins);
    const double prior = static_cast<double>(positives) / static_cast<double>(n);
    const double base = std::log(prior / (1.0 - prior));

    std::vector<double> margin(n, base);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    std::vector<double> gains(x.cols(), 0.0);
    std::vector<Tree> trees;
    trees.reserve(params.n_trees);

    std::vector<std::uint32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0U);
    const auto sample_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));

    TreeBuilder builder(data, params, grad, hess, gains);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - y[i];
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }
        std::vector<std::uint32_t> rows = all_rows;
        if (sample_size < n) {
            std::mt19937_64 rng(derive_seed(seed, t));
            std::shuffle(rows.begin(), rows.end(), rng);
            rows.resize(sample_size);
            std::sort(rows.begin(), rows.end());
        }
        Tree tree = builder.build(std::move(rows));
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += tree.predict(x.row(i));
        }
        trees.push_back(std::move(tree));
    }
    return GbdtModel(x.cols(), base, std::move(trees), std::move(gains));
}

double log_loss(std::span<const double> probabilities, std::span<const int> y) {
    if (probabilities.size() != y.size() || y.empty()) {
        throw DomainError("log_loss: size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::clamp(probabilities[i], 1e-15, 1.0 - 1e-15);
        s -= y[i] ? std::log(p) : std::log(1.0 - p);
    }
    return s / static_cast<double>(y.size());
}

} // namespace tabaudit
