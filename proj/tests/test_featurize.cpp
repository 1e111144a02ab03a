#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tabaudit/corpus.hpp"
#include "tabaudit/error.hpp"
#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/features.hpp"

using namespace tabaudit;
namespace fs = std::filesystem;

namespace {

Table numeric_table(std::vector<std::vector<double>> cols, std::string id = "t") {
    std::vector<Column> columns;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        columns.push_back(Column::from_numbers("c" + std::to_string(j), std::move(cols[j])));
    }
    return Table(std::move(id), std::move(columns));
}

std::vector<double> normal_values(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (auto& x : v) {
        x = z(rng);
    }
    return v;
}

/// Fraction of values whose normalised position falls strictly below the
/// upper edge of bin b; the last bin closes at 1.
std::vector<double> ecdf_oracle(const std::vector<double>& v, std::size_t bins) {
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    std::vector<double> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        std::size_t count = 0;
        for (double x : v) {
            const double u = hi > lo ? (x - lo) / (hi - lo) : 0.0;
            count += (b + 1 == bins) || u * static_cast<double>(bins) < static_cast<double>(b + 1);
        }
        out[b] = static_cast<double>(count) / static_cast<double>(v.size());
    }
    return out;
}

CorpusHandle random_corpus(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::shared_ptr<const Table>> tables;
    for (std::size_t i = 0; i < n; ++i) {
        const auto text = testing::random_table_text(rng, 30 + i % 50, 2 + i % 6);
        tables.push_back(std::make_shared<const Table>(parse_table(text, "r" + std::to_string(i))));
    }
    return CorpusHandle::from_tables(std::move(tables));
}

} // namespace

TEST_CASE("schema dimensions") {
    CHECK(schema_info(SchemaId::Full).dim == 70);
    CHECK(schema_info(SchemaId::Scalars).dim == 9);
    CHECK(schema_info(SchemaId::Histograms).dim == 60);
    CHECK(schema_info(SchemaId::ColHists).dim == 50);
    CHECK(schema_info(SchemaId::CorrHists).dim == 50);
    for (auto id : all_schemas()) {
        CHECK(parse_schema(schema_info(id).name) == id);
        CHECK(feature_names(id).size() == schema_info(id).dim);
    }
    CHECK_FALSE(parse_schema("bogus").has_value());

    std::mt19937_64 rng(3);
    const auto t = parse_table(testing::random_table_text(rng, 80, 6), "d");
    CHECK(full_features(t).values.size() == 70);
    CHECK(scalar_vector(scalar_features(t)).size() == 9);
}

TEST_CASE("the dropped scalar is configurable") {
    const auto t = numeric_table({normal_values(50, 1), normal_values(50, 2)});
    const auto s = scalar_features(t);
    FeatureOptions o;
    o.dropped_scalar = ScalarField::MeanKurtosis;
    const auto v = scalar_vector(s, o);
    REQUIRE(v.size() == 9);
    CHECK(v[4] == s.skewness_std);
    CHECK(v[5] == s.mean_cat_entropy);
    CHECK(o.version() != FeatureOptions{}.version());
}

TEST_CASE("all-categorical table has zero magnitude features") {
    std::vector<std::int32_t> codes;
    for (int i = 0; i < 100; ++i) {
        codes.push_back(i % 4);
    }
    const Table t("cat", {Column::from_tokens("a", codes, {"w", "x", "y", "z"}),
                          Column::from_tokens("b", codes, {"w", "x", "y", "z"})});
    const auto s = scalar_features(t);
    CHECK(s.categorical_ratio == 1.0);
    CHECK(s.mean_cat_cardinality == 4.0);
    CHECK(s.max_cat_cardinality == 4.0);
    CHECK(s.mean_cat_entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(s.mean_skewness == 0.0);
    CHECK(s.mean_kurtosis == 0.0);
    CHECK(s.mean_abs_corr == 0.0);
    for (double v : table_histogram_features(t)) {
        CHECK(v == 0.0);
    }
    for (double v : correlation_histogram(t)) {
        CHECK(v == 0.0);
    }
    CHECK(table_features(SchemaId::ColHists, t).empty());
}

TEST_CASE("perfectly correlated pair") {
    std::vector<double> x(60);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i) * 0.37 - 4.0;
        y[i] = 2.0 * x[i];
    }
    const auto s = scalar_features(numeric_table({x, y}));
    CHECK(s.mean_abs_corr == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.std_abs_corr == 0.0);
    CHECK(s.prop_high_corr == 1.0);
    CHECK(s.mean_skewness == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("symmetric column has zero skewness") {
    const auto m = column_moments({-3.0, -1.0, 0.0, 1.0, 3.0});
    CHECK(std::abs(m.skewness) < 1e-15);
    CHECK(m.mean == 0.0);
    CHECK(m.variance == doctest::Approx(4.0));
    const auto c = column_moments({5.0, 5.0, 5.0});
    CHECK(c.variance == 0.0);
    CHECK(c.skewness == 0.0);
    CHECK(c.excess_kurtosis == 0.0);
}

TEST_CASE("moments agree with a two-pass oracle") {
    std::mt19937_64 rng(17);
    std::lognormal_distribution<double> ln(0.0, 0.8);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(200 + rep * 13);
        for (auto& x : v) {
            x = ln(rng);
        }
        long double mean = 0.0L;
        for (double x : v) {
            mean += x;
        }
        mean /= v.size();
        long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
        for (double x : v) {
            const long double d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= v.size();
        m3 /= v.size();
        m4 /= v.size();
        const auto m = column_moments(v);
        CHECK(m.mean == doctest::Approx(static_cast<double>(mean)).epsilon(1e-9));
        CHECK(m.variance == doctest::Approx(static_cast<double>(m2)).epsilon(1e-9));
        CHECK(m.skewness == doctest::Approx(static_cast<double>(m3 / std::pow(m2, 1.5L))).epsilon(1e-9));
        CHECK(m.excess_kurtosis == doctest::Approx(static_cast<double>(m4 / (m2 * m2) - 3.0L)).epsilon(1e-9));
    }
}

TEST_CASE("entropy") {
    CHECK(entropy_nats({25, 25, 25, 25}) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(entropy_nats({7}) == 0.0);
    CHECK(entropy_nats({}) == 0.0);
}

TEST_CASE("cumulative histograms") {
    SUBCASE("constant values land in the first bin") {
        const auto h = cumulative_histogram({2.5, 2.5, 2.5}, 10);
        for (double v : h) {
            CHECK(v == 1.0);
        }
    }
    SUBCASE("two points split between the end bins") {
        const auto h = cumulative_histogram({0.0, 1.0}, 50);
        CHECK(h.front() == 0.5);
        CHECK(h[48] == 0.5);
        CHECK(h.back() == 1.0);
    }
    SUBCASE("agrees with a direct empirical CDF") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-3.0, 7.0);
        std::vector<double> v(10000);
        for (auto& x : v) {
            x = u(rng);
        }
        const auto h = cumulative_histogram(v, 50);
        const auto o = ecdf_oracle(v, 50);
        for (std::size_t b = 0; b < 50; ++b) {
            CHECK(h[b] == doctest::Approx(o[b]).epsilon(1e-15));
            CHECK(std::abs(h[b] - static_cast<double>(b + 1) / 50.0) < 0.02);
        }
        CHECK(h.back() == 1.0);
        CHECK(std::is_sorted(h.begin(), h.end()));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(cumulative_histogram({}, 10), DomainError);
        CHECK_THROWS_AS(cumulative_column_histogram(Column::from_tokens("t", {0, 1}, {"a", "b"})), DomainError);
    }
}

TEST_CASE("table histogram is the bin-wise mean and std") {
    const std::vector<double> a{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
    const std::vector<double> b{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 9.0};
    const auto ha = cumulative_histogram(a, kHistogramBins);
    const auto hb = cumulative_histogram(b, kHistogramBins);
    const auto f = table_histogram_features(numeric_table({a, b}));
    REQUIRE(f.size() == 2 * kHistogramBins);
    for (std::size_t i = 0; i < kHistogramBins; ++i) {
        CHECK(f[i] == doctest::Approx((ha[i] + hb[i]) / 2.0));
        CHECK(f[kHistogramBins + i] == doctest::Approx(std::abs(ha[i] - hb[i]) / 2.0));
    }
    const auto single = table_histogram_features(numeric_table({a}));
    for (std::size_t i = 0; i < kHistogramBins; ++i) {
        CHECK(single[kHistogramBins + i] == 0.0);
    }
}

TEST_CASE("correlation histograms") {
    SUBCASE("opposite columns") {
        std::vector<double> x(30), y(30);
        for (std::size_t i = 0; i < 30; ++i) {
            x[i] = std::sin(static_cast<double>(i));
            y[i] = -x[i];
        }
        const auto h = correlation_histogram(numeric_table({x, y}));
        CHECK(h.back() == 1.0);
        CHECK(std::accumulate(h.begin(), h.end(), 0.0) == 1.0);
    }
    SUBCASE("one column has no pairs") {
        const auto h = correlation_histogram(numeric_table({normal_values(100, 1)}));
        CHECK(std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; }));
    }
    SUBCASE("independent columns concentrate near zero") {
        std::vector<std::vector<double>> cols;
        for (std::uint64_t j = 0; j < 20; ++j) {
            cols.push_back(normal_values(10000, 100 + j));
        }
        const auto t = numeric_table(cols);
        CHECK(absolute_correlations(t).size() == 190);
        const auto h = correlation_histogram(t);
        CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0));
        CHECK(h[0] + h[1] + h[2] > 0.99);
    }
}

TEST_CASE("features are invariant to row and column order") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 30; ++rep) {
        const auto text = testing::random_table_text(rng, 50 + rep * 3, 2 + rep % 8, 0.03);
        const auto a = parse_table(text, "p");
        const auto b = parse_table(testing::permute_table_text(text, rng), "p");
        for (auto id : {SchemaId::Full, SchemaId::Scalars, SchemaId::Histograms, SchemaId::CorrHists}) {
            const auto fa = table_features(id, a);
            const auto fb = table_features(id, b);
            REQUIRE(fa.size() == 1);
            REQUIRE(fb.size() == 1);
            for (std::size_t i = 0; i < fa[0].values.size(); ++i) {
                REQUIRE(fa[0].values[i] == fb[0].values[i]);
            }
        }
        for (double v : full_features(a).values) {
            REQUIRE(std::isfinite(v));
        }
    }
}

TEST_CASE("featurize_corpus") {
    const auto corpus = random_corpus(40, 8);

    SUBCASE("per-table schemas give one row per table") {
        for (auto id : {SchemaId::Full, SchemaId::Scalars, SchemaId::Histograms, SchemaId::CorrHists}) {
            const auto m = featurize_corpus(corpus, id);
            CHECK(m.rows() == 40);
            CHECK(m.dim() == schema_info(id).dim);
            CHECK(m.origins[7].source_id == "r7");
        }
    }
    SUBCASE("column histograms give one row per magnitude column") {
        std::size_t expected = 0;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            for (const auto& c : corpus.table(i)->columns()) {
                expected += is_magnitude_column(c);
            }
        }
        const auto m = featurize_corpus(corpus, SchemaId::ColHists);
        CHECK(m.rows() == expected);
        for (const auto& o : m.origins) {
            CHECK(o.column >= 0);
        }
    }
    SUBCASE("worker count does not change the result") {
        CHECK(featurize_corpus(corpus, SchemaId::Full, {}, 1) == featurize_corpus(corpus, SchemaId::Full, {}, 4));
    }
    SUBCASE("binary round trip") {
        const auto m = featurize_corpus(corpus, SchemaId::ColHists);
        CHECK(deserialize_feature_matrix(serialize_feature_matrix(m)) == m);
        const auto path = fs::temp_directory_path() / "tabaudit_featurize_rt.tfm";
        write_feature_matrix(m, path);
        CHECK(read_feature_matrix(path) == m);
        fs::remove(path);
        CHECK_THROWS_AS(deserialize_feature_matrix("garbage bytes"), InputError);
    }
    SUBCASE("csv export has a header and a line per row") {
        const auto m = featurize_corpus(corpus, SchemaId::Scalars);
        const auto text = feature_matrix_to_csv(m);
        CHECK(text.rfind("source_id,column,categorical_ratio", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 41);
    }
    SUBCASE("incompatible matrices are rejected") {
        const auto a = featurize_corpus(corpus, SchemaId::Full);
        const auto b = featurize_corpus(corpus, SchemaId::Scalars);
        CHECK_THROWS_AS(require_compatible(a, b), DomainError);
        FeatureOptions o;
        o.dropped_scalar = ScalarField::MeanKurtosis;
        CHECK_THROWS_AS(require_compatible(a, featurize_corpus(corpus, SchemaId::Full, o)), DomainError);
    }
}

TEST_CASE("skipped tables are reported and capped") {
    // Huge magnitudes overflow the fourth moment, so the table cannot be featurized.
    auto overflow = [](const std::string& id) {
        return std::make_shared<const Table>(numeric_table({{1e300, -1e300, 1e300, -1e300, 0.0}}, id));
    };
    std::vector<std::shared_ptr<const Table>> tables;
    for (int i = 0; i < 19; ++i) {
        tables.push_back(std::make_shared<const Table>(numeric_table({normal_values(30, i)}, "ok" + std::to_string(i))));
    }
    tables.push_back(overflow("bad0"));
    FeaturizeReport report;
    const auto m = featurize_corpus(CorpusHandle::from_tables(tables), SchemaId::Full, {}, 1, &report);
    CHECK(m.rows() == 19);
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0].source_id == "bad0");

    tables.push_back(overflow("bad1"));
    tables.push_back(overflow("bad2"));
    CHECK_THROWS_AS(featurize_corpus(CorpusHandle::from_tables(tables), SchemaId::Full), InputError);
}
