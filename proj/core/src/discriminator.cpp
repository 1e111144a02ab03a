#include "tabaudit/discriminator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "tabaudit/csv.hpp"
#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

LabeledFeatureSet LabeledFeatureSet::stack(const DenseMatrix& first, const DenseMatrix& second) {
    if (first.cols() != second.cols()) {
        throw DomainError("stack: dimension mismatch");
    }
    LabeledFeatureSet out;
    std::vector<double> data;
    data.reserve((first.rows() + second.rows()) * first.cols());
    data.insert(data.end(), first.data().begin(), first.data().end());
    data.insert(data.end(), second.data().begin(), second.data().end());
    out.x = DenseMatrix(first.rows() + second.rows(), first.cols(), std::move(data));
    out.y.assign(first.rows(), 1);
    out.y.resize(first.rows() + second.rows(), 0);
    return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw DomainError("auc: scores and labels differ in length");
    }
    std::size_t n_pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) {
            throw DomainError("auc: labels must be 0 or 1");
        }
        n_pos += static_cast<std::size_t>(l);
    }
    const std::size_t n = labels.size();
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DomainError("auc: both classes must be present");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of positives, in doubled units to stay exact.
    std::uint64_t twice_rank_sum = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const std::uint64_t twice_mid = (i + 1) + (j + 1);
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                twice_rank_sum += twice_mid;
            }
        }
        i = j + 1;
    }
    const double u = static_cast<double>(twice_rank_sum) / 2.0 - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

StratifiedSplit stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DomainError("stratified_split: test_fraction must lie in (0, 1)");
    }
    std::mt19937_64 rng(seed);
    StratifiedSplit out;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) {
                idx.push_back(i);
            }
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

AucReport summarize_auc(std::vector<double> per_rep) {
    AucReport r;
    r.n_bootstrap = per_rep.size();
    if (!per_rep.empty()) {
        const double n = static_cast<double>(per_rep.size());
        r.mean_auc = std::accumulate(per_rep.begin(), per_rep.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : per_rep) {
            ss += (v - r.mean_auc) * (v - r.mean_auc);
        }
        r.std_auc = std::sqrt(ss / n);
    }
    r.per_rep_auc = std::move(per_rep);
    return r;
}

AucReport bootstrap_auc(const DenseMatrix& a, const DenseMatrix& b, const GbdtParams& params, std::size_t n_boot,
                        std::uint64_t seed, unsigned workers) {
    params.validate();
    if (a.rows() < kMinRowsPerPopulation || b.rows() < kMinRowsPerPopulation) {
        throw DomainError("bootstrap_auc: each population needs at least " + std::to_string(kMinRowsPerPopulation) +
                          " rows");
    }
    if (n_boot == 0) {
        throw DomainError("bootstrap_auc: n_boot must be positive");
    }
    const auto data = LabeledFeatureSet::stack(a, b);
    std::vector<double> per_rep(n_boot);
    parallel_for(n_boot, workers, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(seed, r);
        const auto split = stratified_split(data.y, 0.2, rep_seed);
        const DenseMatrix train_x = data.x.select_rows(split.train);
        std::vector<int> train_y;
        train_y.reserve(split.train.size());
        for (auto i : split.train) {
            train_y.push_back(data.y[i]);
        }
        const auto model = fit_gbdt(train_x, train_y, params, mix_seed(rep_seed));
        std::vector<double> scores;
        std::vector<int> test_y;
        scores.reserve(split.test.size());
        for (auto i : split.test) {
            scores.push_back(model.predict_margin(data.x.row(i)));
            test_y.push_back(data.y[i]);
        }
        per_rep[r] = auc(scores, test_y);
    });
    return summarize_auc(std::move(per_rep));
}

AucReport bootstrap_auc(const FeatureMatrix& a, const FeatureMatrix& b, const GbdtParams& params, std::size_t n_boot,
                        std::uint64_t seed, unsigned workers) {
    require_compatible(a, b);
    return bootstrap_auc(a.values, b.values, params, n_boot, seed, workers);
}

std::vector<double> discriminator_importance(const FeatureMatrix& a, const FeatureMatrix& b,
                                             const GbdtParams& params, std::uint64_t seed) {
    require_compatible(a, b);
    const auto data = LabeledFeatureSet::stack(a.values, b.values);
    return fit_gbdt(data.x, data.y, params, seed).feature_importance();
}

std::string importance_to_csv(const std::vector<std::string>& names, const std::vector<double>& shares) {
    if (names.size() != shares.size()) {
        throw DomainError("importance_to_csv: names and shares differ in length");
    }
    std::string out = "feature,gain_share\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), shares[i]);
        (void)ec;
        out += csv::quote(names[i], ',') + "," + std::string(buf, ptr) + "\n";
    }
    return out;
}

} // namespace tabaudit
