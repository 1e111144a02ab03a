#include "tabaudit/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabaudit/error.hpp"

namespace tabaudit {

namespace {

constexpr std::array<FeatureSchema, 5> kSchemas{{
    {SchemaId::Full, "full", 1 + 9 + 2 * kHistogramBins, kHistogramBins, false},
    {SchemaId::Scalars, "scalars", 9, 0, false},
    {SchemaId::Histograms, "histograms", 2 * kHistogramBins, kHistogramBins, false},
    {SchemaId::ColHists, "colhists", kColumnHistogramBins, kColumnHistogramBins, true},
    {SchemaId::CorrHists, "corrhists", kCorrelationBins, kCorrelationBins, false},
}};

constexpr std::array<std::string_view, kScalarFieldCount> kScalarNames{
    "categorical_ratio", "mean_cat_cardinality", "max_cat_cardinality", "mean_skewness", "skewness_std",
    "mean_kurtosis",     "mean_cat_entropy",     "mean_abs_corr",       "std_abs_corr",  "prop_high_corr",
};

double mean_of(std::vector<double> values) {
    if (values.empty()) {
        return 0.0;
    }
    const double n = static_cast<double>(values.size());
    return order_invariant_sum(std::move(values)) / n;
}

/// Population standard deviation, order invariant.
double std_of(const std::vector<double>& values) {
    if (values.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(values);
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [m](double v) { return (v - m) * (v - m); });
    return std::sqrt(order_invariant_sum(std::move(sq)) / static_cast<double>(values.size()));
}

} // namespace

const FeatureSchema& schema_info(SchemaId id) {
    return kSchemas[static_cast<std::size_t>(id)];
}

std::optional<SchemaId> parse_schema(std::string_view name) {
    for (const auto& s : kSchemas) {
        if (s.name == name) {
            return s.id;
        }
    }
    // Accept the long display names too.
    if (name == "col_hists" || name == "column_histograms") return SchemaId::ColHists;
    if (name == "corr_hists" || name == "correlation_histograms") return SchemaId::CorrHists;
    return std::nullopt;
}

std::vector<SchemaId> all_schemas() {
    return {SchemaId::Full, SchemaId::Scalars, SchemaId::Histograms, SchemaId::ColHists, SchemaId::CorrHists};
}

std::string_view to_string(ScalarField field) noexcept {
    return kScalarNames[static_cast<std::size_t>(field)];
}

std::optional<ScalarField> parse_scalar_field(std::string_view name) {
    for (std::size_t i = 0; i < kScalarNames.size(); ++i) {
        if (kScalarNames[i] == name) {
            return static_cast<ScalarField>(i);
        }
    }
    return std::nullopt;
}

double ScalarFeatures::get(ScalarField field) const noexcept {
    switch (field) {
    case ScalarField::CategoricalRatio: return categorical_ratio;
    case ScalarField::MeanCatCardinality: return mean_cat_cardinality;
    case ScalarField::MaxCatCardinality: return max_cat_cardinality;
    case ScalarField::MeanSkewness: return mean_skewness;
    case ScalarField::SkewnessStd: return skewness_std;
    case ScalarField::MeanKurtosis: return mean_kurtosis;
    case ScalarField::MeanCatEntropy: return mean_cat_entropy;
    case ScalarField::MeanAbsCorr: return mean_abs_corr;
    case ScalarField::StdAbsCorr: return std_abs_corr;
    case ScalarField::PropHighCorr: return prop_high_corr;
    }
    return 0.0;
}

std::string FeatureOptions::version() const {
    std::string v(kFeatureVersion);
    if (dropped_scalar != ScalarField::SkewnessStd) {
        v += "+drop=";
        v += to_string(dropped_scalar);
    }
    return v;
}

double order_invariant_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) {
        total += v;
    }
    return total;
}

ColumnMoments column_moments(std::vector<double> values) {
    ColumnMoments m;
    if (values.empty()) {
        return m;
    }
    const double n = static_cast<double>(values.size());
    m.mean = order_invariant_sum(values) / n;
    std::vector<double> d2(values.size()), d3(values.size()), d4(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - m.mean;
        d2[i] = d * d;
        d3[i] = d2[i] * d;
        d4[i] = d2[i] * d2[i];
    }
    const double m2 = order_invariant_sum(std::move(d2)) / n;
    const double m3 = order_invariant_sum(std::move(d3)) / n;
    const double m4 = order_invariant_sum(std::move(d4)) / n;
    m.variance = m2;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

double entropy_nats(const std::vector<std::size_t>& counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    if (total == 0.0) {
        return 0.0;
    }
    std::vector<double> terms;
    terms.reserve(counts.size());
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            terms.push_back(-p * std::log(p));
        }
    }
    return order_invariant_sum(std::move(terms));
}

bool is_magnitude_column(const Column& column) {
    return column.kind() == ColumnKind::Numeric && column.has_magnitudes() &&
           column.missing_count() < column.size();
}

std::vector<double> absolute_correlations(const Table& table) {
    std::vector<const Column*> numeric;
    for (const auto& c : table.columns()) {
        if (is_magnitude_column(c)) {
            numeric.push_back(&c);
        }
    }
    std::vector<double> out;
    std::vector<double> xs, ys;
    for (std::size_t a = 0; a < numeric.size(); ++a) {
        for (std::size_t b = a + 1; b < numeric.size(); ++b) {
            const auto& x = numeric[a]->numbers();
            const auto& y = numeric[b]->numbers();
            xs.clear();
            ys.clear();
            for (std::size_t r = 0; r < x.size(); ++r) {
                if (!std::isnan(x[r]) && !std::isnan(y[r])) {
                    xs.push_back(x[r]);
                    ys.push_back(y[r]);
                }
            }
            if (xs.size() < 3) {
                continue;
            }
            const double n = static_cast<double>(xs.size());
            const double mx = order_invariant_sum(xs) / n;
            const double my = order_invariant_sum(ys) / n;
            std::vector<double> sxy(xs.size()), sxx(xs.size()), syy(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double dx = xs[i] - mx;
                const double dy = ys[i] - my;
                sxy[i] = dx * dy;
                sxx[i] = dx * dx;
                syy[i] = dy * dy;
            }
            const double vxx = order_invariant_sum(std::move(sxx));
            const double vyy = order_invariant_sum(std::move(syy));
            if (vxx <= 0.0 || vyy <= 0.0) {
                continue;
            }
            const double r = order_invariant_sum(std::move(sxy)) / std::sqrt(vxx * vyy);
            out.push_back(std::clamp(std::abs(r), 0.0, 1.0));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

ScalarFeatures scalar_features(const Table& table) {
    ScalarFeatures s;
    s.n_cols = static_cast<double>(table.n_cols());

    std::vector<double> cardinalities, entropies, skews, kurts;
    std::size_t categorical = 0;
    for (const auto& c : table.columns()) {
        if (c.kind() == ColumnKind::Categorical) {
            ++categorical;
            cardinalities.push_back(static_cast<double>(c.cardinality()));
            entropies.push_back(entropy_nats(c.value_counts()));
        } else if (is_magnitude_column(c)) {
            const auto m = column_moments(c.present_numbers());
            skews.push_back(m.skewness);
            kurts.push_back(m.excess_kurtosis);
        }
    }
    s.categorical_ratio = static_cast<double>(categorical) / static_cast<double>(table.n_cols());
    if (!cardinalities.empty()) {
        s.max_cat_cardinality = *std::max_element(cardinalities.begin(), cardinalities.end());
        s.mean_cat_cardinality = mean_of(cardinalities);
        s.mean_cat_entropy = mean_of(entropies);
    }
    s.mean_skewness = mean_of(skews);
    s.skewness_std = std_of(skews);
    s.mean_kurtosis = mean_of(kurts);

    const auto corr = absolute_correlations(table);
    if (!corr.empty()) {
        s.mean_abs_corr = mean_of(corr);
        s.std_abs_corr = std_of(corr);
        const auto high = std::count_if(corr.begin(), corr.end(), [](double r) { return r >= kHighCorrelation; });
        s.prop_high_corr = static_cast<double>(high) / static_cast<double>(corr.size());
    }
    return s;
}

std::vector<double> scalar_vector(const ScalarFeatures& s, const FeatureOptions& options) {
    std::vector<double> out;
    out.reserve(kScalarFieldCount - 1);
    for (std::size_t i = 0; i < kScalarFieldCount; ++i) {
        const auto field = static_cast<ScalarField>(i);
        if (field != options.dropped_scalar) {
            out.push_back(s.get(field));
        }
    }
    return out;
}

std::vector<double> cumulative_histogram(const std::vector<double>& values, std::size_t bins) {
    if (values.empty()) {
        throw DomainError("cumulative_histogram: no values");
    }
    if (bins == 0) {
        throw DomainError("cumulative_histogram: bins must be >= 1");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        double u = range > 0.0 ? (v - lo) / range : 0.0;
        auto b = static_cast<std::size_t>(u * static_cast<double>(bins));
        counts[std::min(b, bins - 1)] += 1;
    }
    std::vector<double> hist(bins);
    std::size_t running = 0;
    const double n = static_cast<double>(values.size());
    for (std::size_t b = 0; b < bins; ++b) {
        running += counts[b];
        hist[b] = static_cast<double>(running) / n;
    }
    return hist;
}

std::vector<double> cumulative_column_histogram(const Column& column, std::size_t bins) {
    if (!column.has_magnitudes()) {
        throw DomainError("cumulative_column_histogram: column '" + column.name() + "' holds tokens");
    }
    auto values = column.present_numbers();
    if (values.empty()) {
        throw DomainError("cumulative_column_histogram: column '" + column.name() + "' is all missing");
    }
    return cumulative_histogram(values, bins);
}

std::vector<double> table_histogram_features(const Table& table, std::size_t bins) {
    std::vector<std::vector<double>> hists;
    for (const auto& c : table.columns()) {
        if (is_magnitude_column(c)) {
            hists.push_back(cumulative_column_histogram(c, bins));
        }
    }
    std::vector<double> out(2 * bins, 0.0);
    if (hists.empty()) {
        return out;
    }
    std::vector<double> column_values(hists.size());
    for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t j = 0; j < hists.size(); ++j) {
            column_values[j] = hists[j][b];
        }
        out[b] = mean_of(column_values);
        out[bins + b] = std_of(column_values);
    }
    return out;
}

std::vector<double> correlation_histogram(const Table& table, std::size_t bins) {
    if (bins == 0) {
        throw DomainError("correlation_histogram: bins must be >= 1");
    }
    std::vector<double> out(bins, 0.0);
    const auto corr = absolute_correlations(table);
    if (corr.empty()) {
        return out;
    }
    std::vector<std::size_t> counts(bins, 0);
    for (double r : corr) {
        auto b = static_cast<std::size_t>(r * static_cast<double>(bins));
        counts[std::min(b, bins - 1)] += 1;
    }
    const double n = static_cast<double>(corr.size());
    for (std::size_t b = 0; b < bins; ++b) {
        out[b] = static_cast<double>(counts[b]) / n;
    }
    return out;
}

FeatureVector full_features(const Table& table, const FeatureOptions& options) {
    const auto s = scalar_features(table);
    FeatureVector fv{SchemaId::Full, {}, {table.source_id(), -1}};
    fv.values.reserve(schema_info(SchemaId::Full).dim);
    fv.values.push_back(s.n_cols);
    const auto scalars = scalar_vector(s, options);
    fv.values.insert(fv.values.end(), scalars.begin(), scalars.end());
    const auto hist = table_histogram_features(table, kHistogramBins);
    fv.values.insert(fv.values.end(), hist.begin(), hist.end());
    return fv;
}

std::vector<FeatureVector> table_features(SchemaId schema, const Table& table, const FeatureOptions& options) {
    switch (schema) {
    case SchemaId::Full:
        return {full_features(table, options)};
    case SchemaId::Scalars:
        return {{schema, scalar_vector(scalar_features(table), options), {table.source_id(), -1}}};
    case SchemaId::Histograms:
        return {{schema, table_histogram_features(table, kHistogramBins), {table.source_id(), -1}}};
    case SchemaId::CorrHists:
        return {{schema, correlation_histogram(table, kCorrelationBins), {table.source_id(), -1}}};
    case SchemaId::ColHists: {
        std::vector<FeatureVector> rows;
        for (std::size_t j = 0; j < table.n_cols(); ++j) {
            const auto& c = table.column(j);
            if (is_magnitude_column(c)) {
                rows.push_back({schema, cumulative_column_histogram(c, kColumnHistogramBins),
                                {table.source_id(), static_cast<long>(j)}});
            }
        }
        return rows;
    }
    }
    throw DomainError("table_features: unknown schema");
}

std::vector<std::string> feature_names(SchemaId schema, const FeatureOptions& options) {
    std::vector<std::string> scalars;
    for (std::size_t i = 0; i < kScalarFieldCount; ++i) {
        const auto field = static_cast<ScalarField>(i);
        if (field != options.dropped_scalar) {
            scalars.emplace_back(to_string(field));
        }
    }
    auto hist_names = [](std::size_t bins) {
        std::vector<std::string> names;
        for (std::size_t b = 0; b < bins; ++b) names.push_back("hist_mean_" + std::to_string(b));
        for (std::size_t b = 0; b < bins; ++b) names.push_back("hist_std_" + std::to_string(b));
        return names;
    };
    std::vector<std::string> names;
    switch (schema) {
    case SchemaId::Full: {
        names.push_back("n_cols");
        names.insert(names.end(), scalars.begin(), scalars.end());
        auto h = hist_names(kHistogramBins);
        names.insert(names.end(), h.begin(), h.end());
        break;
    }
    case SchemaId::Scalars:
        names = scalars;
        break;
    case SchemaId::Histograms:
        names = hist_names(kHistogramBins);
        break;
    case SchemaId::ColHists:
        for (std::size_t b = 0; b < kColumnHistogramBins; ++b) names.push_back("cdf_" + std::to_string(b));
        break;
    case SchemaId::CorrHists:
        for (std::size_t b = 0; b < kCorrelationBins; ++b) names.push_back("corr_bin_" + std::to_string(b));
        break;
    }
    return names;
}

} // namespace tabaudit
