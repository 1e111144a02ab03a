#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tabaudit/analysis.hpp"
#include "tabaudit/error.hpp"
#include "tabaudit/stats.hpp"

using namespace tabaudit;

namespace {

FeatureMatrix scalars_matrix(const DenseMatrix& values, const std::string& prefix) {
    FeatureMatrix m;
    m.schema = SchemaId::Scalars;
    m.values = values;
    for (std::size_t i = 0; i < values.rows(); ++i) {
        m.origins.push_back({prefix + std::to_string(i) + ".csv", -1});
    }
    return m;
}

double sample_r(const std::vector<double>& x, const std::vector<double>& y) {
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

/// Gauss-Jordan inverse of a small symmetric positive definite matrix.
std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        inv[i][i] = 1.0;
    }
    for (std::size_t c = 0; c < n; ++c) {
        const double piv = a[c][c];
        for (std::size_t j = 0; j < n; ++j) {
            a[c][j] /= piv;
            inv[c][j] /= piv;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) {
                continue;
            }
            const double f = a[r][c];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[c][j];
                inv[r][j] -= f * inv[c][j];
            }
        }
    }
    return inv;
}

std::string perf_csv(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& rows) {
    std::string text = "dataset,ours,m1,m2\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        text += ids[i];
        for (double v : rows[i]) {
            text += "," + std::to_string(v);
        }
        text += "\n";
    }
    return text;
}

} // namespace

TEST_CASE("rank and relative metrics") {
    const std::vector<double> m{0.8, 0.9, 0.7, 0.8};
    CHECK(model_rank(m, 0) == 2.5);
    CHECK(model_rank(m, 1) == 1.0);
    CHECK(model_rank(m, 2) == 4.0);
    CHECK(relative_auc_mean(m, 0) == doctest::Approx(0.8 / 0.8));
    CHECK(relative_auc_mean(m, 1) == doctest::Approx(0.9 / ((0.8 + 0.7 + 0.8) / 3.0)));
    CHECK(relative_auc_mean(m, 1, false) == doctest::Approx(0.9 / 0.8));
    CHECK(relative_auc_best(m, 2) == doctest::Approx(0.7 / 0.9));
    CHECK(relative_auc_best(m, 1) == doctest::Approx(0.9 / 0.8));
    CHECK(relative_auc_best(m, 1, false) == doctest::Approx(1.0));
    CHECK_THROWS_AS(relative_auc_mean(std::vector<double>{0.5, 0.0, 0.0}, 0), DomainError);

    // Scaling every model leaves relative metrics and ranks unchanged;
    // reordering the other models changes nothing.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.3, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> v(5);
        for (auto& x : v) {
            x = u(rng);
        }
        std::vector<double> scaled(v), shuffled(v);
        for (auto& x : scaled) {
            x *= 0.5;
        }
        std::shuffle(shuffled.begin() + 1, shuffled.end(), rng);
        CHECK(model_rank(scaled, 0) == model_rank(v, 0));
        CHECK(relative_auc_mean(scaled, 0) == doctest::Approx(relative_auc_mean(v, 0)));
        CHECK(relative_auc_best(scaled, 0) == doctest::Approx(relative_auc_best(v, 0)));
        CHECK(model_rank(shuffled, 0) == model_rank(v, 0));
        CHECK(relative_auc_best(shuffled, 0) == relative_auc_best(v, 0));
    }
}

TEST_CASE("performance table parsing") {
    const auto t = PerformanceTable::from_csv("id,a,b,c\nx,0.5,0.6,0.7\ny,0.9,0.1,0.2\n", "b");
    CHECK(t.target_index() == 1);
    CHECK(t.ids == std::vector<std::string>{"x", "y"});
    CHECK(t.values(1, 0) == 0.9);
    const auto rank = performance_metric(t, PerformanceMetric::Rank);
    CHECK(rank == std::vector<double>{2.0, 3.0});

    CHECK_THROWS_AS(PerformanceTable::from_csv("id,a,b\nx,0.5,0.6\n", "zzz"), InputError);
    CHECK_THROWS_AS(PerformanceTable::from_csv("id,a,b\nx,0.5,abc\n", "a"), InputError);
    CHECK_THROWS_AS(PerformanceTable::from_csv("id,a,b\nx,0.5,1.5\n", "a"), InputError);
    CHECK_THROWS_AS(PerformanceTable::from_csv("id,a,b\nx,0.5,\n", "a"), InputError);
    CHECK_THROWS_AS(PerformanceTable::from_csv("id,a\nx,0.5\n", "a"), InputError);
}

TEST_CASE("proximity agrees with brute force") {
    const auto bench = testing::uniform_matrix(30, 4, 1);
    const auto ref = testing::uniform_matrix(80, 4, 2, 0.3, 1.4);
    const auto scores = proximity_scores(scalars_matrix(bench, "b"), scalars_matrix(ref, "r"), 5);
    // Joint min-max by hand, then mean of the 5 smallest distances.
    auto rows_b = testing::rows_of(bench);
    auto rows_r = testing::rows_of(ref);
    for (std::size_t c = 0; c < 4; ++c) {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto* s : {&rows_b, &rows_r}) {
            for (const auto& r : *s) {
                lo = std::min(lo, r[c]);
                hi = std::max(hi, r[c]);
            }
        }
        for (auto* s : {&rows_b, &rows_r}) {
            for (auto& r : *s) {
                r[c] = (r[c] - lo) / (hi - lo);
            }
        }
    }
    const auto d = testing::distance_matrix(rows_b, rows_r);
    REQUIRE(scores.size() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(scores[i] == doctest::Approx(testing::mean_smallest(d[i], 5, -1)).epsilon(1e-12));
    }

    // A benchmark drawn from the reference itself sits at distance zero.
    CHECK(proximity_scores(scalars_matrix(ref, "r"), scalars_matrix(ref, "r"), 1) ==
          std::vector<double>(80, 0.0));
}

TEST_CASE("dataset keys and per-dataset proximity") {
    CHECK(dataset_key("a/b/iris.csv") == "iris");
    CHECK(dataset_key("wine") == "wine");
    FeatureMatrix bench;
    bench.schema = SchemaId::ColHists;
    bench.values = testing::uniform_matrix(4, 50, 3);
    bench.origins = {{"x.csv", 0}, {"x.csv", 2}, {"y.csv", 1}, {"x.csv", 3}};
    FeatureMatrix ref = bench;
    ref.values = testing::uniform_matrix(10, 50, 4);
    ref.origins.assign(10, {"r.csv", 0});
    const auto rows = proximity_scores(bench, ref, 2);
    const auto per = dataset_proximity(bench, ref, 2);
    REQUIRE(per.ids == std::vector<std::string>{"x", "y"});
    CHECK(per.distance[0] == doctest::Approx((rows[0] + rows[1] + rows[3]) / 3.0));
    CHECK(per.distance[1] == rows[2]);
}

TEST_CASE("pearson") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(pearson(x, std::vector<double>{2, 4, 6, 8, 10}).r == doctest::Approx(1.0));
    CHECK(pearson(x, std::vector<double>{5, 4, 3, 2, 1}).r == doctest::Approx(-1.0));
    const auto r = pearson(x, std::vector<double>{1, 3, 2, 5, 4});
    CHECK(r.r == doctest::Approx(0.8));
    CHECK(r.n == 5);
    CHECK(r.df == 3);
    CHECK(r.p == doctest::Approx(testing::oracle_p_value(0.8, 3)).epsilon(1e-8));
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 1, 1, 1, 1}), DomainError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{2, 1}), DomainError);

    SUBCASE("null p-values are roughly uniform") {
        std::mt19937_64 rng(9);
        std::normal_distribution<double> z;
        int rejections = 0;
        const int reps = 4000;
        for (int rep = 0; rep < reps; ++rep) {
            std::vector<double> a(30), b(30);
            for (std::size_t i = 0; i < 30; ++i) {
                a[i] = z(rng);
                b[i] = z(rng);
            }
            rejections += pearson(a, b).p < 0.05;
        }
        CHECK(static_cast<double>(rejections) / reps == doctest::Approx(0.05).epsilon(0.25));
    }
}

TEST_CASE("p-values match the exact t distribution") {
    for (unsigned df : {1u, 2u, 3u, 7u, 10u, 25u, 60u, 197u}) {
        for (double r : {0.01, 0.1, 0.3, 0.55, 0.8, 0.97}) {
            CHECK(correlation_p_value(r, df) == doctest::Approx(testing::oracle_p_value(r, df)).epsilon(1e-8));
            CHECK(correlation_p_value(-r, df) == correlation_p_value(r, df));
        }
        CHECK(student_t_cdf(0.0, df) == doctest::Approx(0.5));
    }
    CHECK(correlation_p_value(0.0, 10) == doctest::Approx(1.0));
}

TEST_CASE("partial correlation") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    const std::size_t n = 120;
    std::vector<double> x(n), y(n), c1(n), c2(n);
    for (std::size_t i = 0; i < n; ++i) {
        c1[i] = z(rng);
        c2[i] = z(rng);
        x[i] = 0.7 * c1[i] - 0.4 * c2[i] + z(rng);
        y[i] = 0.5 * c1[i] + 0.3 * x[i] + z(rng);
    }

    SUBCASE("no covariates is plain pearson, bit for bit") {
        const auto a = partial_correlation(x, y, DenseMatrix(n, 0));
        const auto b = pearson(x, y);
        CHECK(a.r == b.r);
        CHECK(a.p == b.p);
        CHECK(a.df == b.df);
    }
    SUBCASE("one covariate matches the textbook formula") {
        const double rxy = sample_r(x, y), rxz = sample_r(x, c1), ryz = sample_r(y, c1);
        const double expected = (rxy - rxz * ryz) / std::sqrt((1 - rxz * rxz) * (1 - ryz * ryz));
        const auto r = partial_correlation(x, y, DenseMatrix(n, 1, c1));
        CHECK(r.r == doctest::Approx(expected).epsilon(1e-10));
        CHECK(r.df == n - 3);
        CHECK(r.p == doctest::Approx(testing::oracle_p_value(r.r, static_cast<unsigned>(n - 3))).epsilon(1e-8));
    }
    SUBCASE("two covariates match the precision-matrix form") {
        const std::vector<const std::vector<double>*> vars{&x, &y, &c1, &c2};
        std::vector<std::vector<double>> corr(4, std::vector<double>(4));
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
                corr[a][b] = a == b ? 1.0 : sample_r(*vars[a], *vars[b]);
            }
        }
        const auto p = invert(corr);
        const double expected = -p[0][1] / std::sqrt(p[0][0] * p[1][1]);
        DenseMatrix zmat(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            zmat(i, 0) = c1[i];
            zmat(i, 1) = c2[i];
        }
        const auto r = partial_correlation(x, y, zmat);
        CHECK(r.r == doctest::Approx(expected).epsilon(1e-10));
        CHECK(r.n_covariates == 2);
        CHECK(r.df == n - 4);
    }
    SUBCASE("a covariate equal to x is degenerate") {
        const auto r = partial_correlation(x, y, DenseMatrix(n, 1, x));
        CHECK(r.degenerate);
        CHECK(r.r == 0.0);
    }
    SUBCASE("rank-deficient covariates and too few rows") {
        DenseMatrix dup(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            dup(i, 0) = c1[i];
            dup(i, 1) = 2.0 * c1[i];
        }
        CHECK_THROWS_AS(partial_correlation(x, y, dup), DomainError);
        const std::vector<double> small{1, 2, 3, 4};
        CHECK_THROWS_AS(partial_correlation(small, std::vector<double>{4, 1, 3, 2}, DenseMatrix(4, 2, c1)),
                        DomainError);
    }
}

TEST_CASE("detectable correlation") {
    CHECK(detectable_r(200) == doctest::Approx(0.197).epsilon(0.002));
    CHECK(detectable_r(50) == doctest::Approx(0.3873).epsilon(0.001));
    double last = 1.0;
    for (std::size_t n = 4; n < 500; n += 7) {
        const double r = detectable_r(n);
        CHECK(r < last);
        CHECK(r > 0.0);
        last = r;
    }
    CHECK_THROWS_AS(detectable_r(3), DomainError);
}

TEST_CASE("covariate helpers") {
    std::vector<double> labels(40, 0.0);
    for (std::size_t i = 0; i < 10; ++i) {
        labels[i] = 1.0;
    }
    CHECK(class_balance(Column::from_numbers("y", labels)) == doctest::Approx(1.0 / 3.0));
    const auto t = parse_table("a,b,y\n1,2,0\n2,5,1\n3,1,0\n4,7,1\n", "cov");
    const auto c = table_covariates(t);
    CHECK(c.n_rows == 4.0);
    CHECK(c.n_cols == 3.0);
    CHECK(c.class_balance == 1.0);
    CHECK(c.full_observed);
    CHECK_FALSE(table_covariates(parse_table("a,y\n1,0\n,1\n3,0\n4,1\n", "gap")).full_observed);
    CHECK(direction_tag(0.3, PerformanceMetric::RelativeMean) == "↑");
    CHECK(direction_tag(-0.3, PerformanceMetric::RelativeBest) == "↓");
    CHECK(direction_tag(0.3, PerformanceMetric::Rank) == "↓");
    CHECK(direction_tag(-0.3, PerformanceMetric::Rank) == "↑");
}

TEST_CASE("proximity-performance report") {
    const std::size_t n = 200;
    const auto bench = scalars_matrix(testing::uniform_matrix(n, 9, 11), "d");
    const auto ref = scalars_matrix(testing::uniform_matrix(150, 9, 12, 0.2, 1.2), "r");
    const auto prox = dataset_proximity(bench, ref, 5);

    // Plant a correlation of about 0.6 between proximity and the target metric.
    std::mt19937_64 rng(13);
    std::normal_distribution<double> z;
    double mean = 0, sd = 0;
    for (double d : prox.distance) {
        mean += d / n;
    }
    for (double d : prox.distance) {
        sd += (d - mean) * (d - mean) / n;
    }
    sd = std::sqrt(sd);
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = 0.6 * (prox.distance[i] - mean) / sd + 0.8 * z(rng);
        ids.push_back(prox.ids[i]);
        rows.push_back({std::clamp(0.6 + 0.05 * s, 0.0, 1.0), 0.6, 0.6});
    }

    AnalysisInput input;
    input.performance = PerformanceTable::from_csv(perf_csv(ids, rows), "ours");
    input.features.push_back({bench, ref});
    for (std::size_t i = 0; i < n; ++i) {
        TableCovariates c;
        c.n_rows = 100.0 + static_cast<double>((i * 37) % 500);
        c.n_cols = 3.0 + static_cast<double>((i * 11) % 20);
        c.class_balance = 0.2 + 0.7 * static_cast<double>((i * 13) % 17) / 17.0;
        c.skewness = z(rng);
        c.kurtosis = z(rng);
        c.categorical_ratio = static_cast<double>(i % 5) / 5.0;
        c.full_observed = i % 4 != 0;
        input.covariates[prox.ids[i]] = c;
    }

    SUBCASE("shape and planted effect") {
        const auto report = proximity_performance_report(input);
        REQUIRE(report.cells.size() == 9);
        CHECK(report.scatter.size() == n);
        CHECK(report.match_fraction == 1.0);
        CHECK(report.detectable_r == doctest::Approx(detectable_r(n)));
        REQUIRE(report.schemas.size() == 1);
        CHECK(report.schemas[0].schema == "scalars");
        CHECK(report.schemas[0].n_datasets == n);
        for (const auto& c : report.cells) {
            CHECK(c.computed);
            if (c.metric == PerformanceMetric::RelativeMean) {
                CHECK(c.report.r == doctest::Approx(0.6).epsilon(0.17));
                CHECK(c.direction == "↑");
            }
            if (c.covariate_set == "full") {
                CHECK(c.report.n == n - n / 4);
                CHECK(c.report.df == c.report.n - 8);
            }
            if (c.covariate_set == "universal") {
                CHECK(c.report.df == n - 5);
            }
        }
        const auto cells = correlation_cells_csv(report);
        CHECK(cells.rfind("schema,covariates,metric,r,p,n,df,direction,computed,note\n", 0) == 0);
        CHECK(std::count(cells.begin(), cells.end(), '\n') == 10);
        const auto scatter = scatter_csv(report);
        CHECK(std::count(scatter.begin(), scatter.end(), '\n') == static_cast<long>(n + 1));
    }
    SUBCASE("constant metric leaves cells uncomputed") {
        for (auto& r : rows) {
            r = {0.9, 0.6, 0.6};
        }
        input.performance = PerformanceTable::from_csv(perf_csv(ids, rows), "ours");
        const auto report = proximity_performance_report(input);
        for (const auto& c : report.cells) {
            CHECK_FALSE(c.computed);
            CHECK_FALSE(c.note.empty());
        }
    }
    SUBCASE("a covariate that reproduces proximity is reported as degenerate") {
        for (std::size_t i = 0; i < n; ++i) {
            input.covariates[prox.ids[i]].n_rows = 3.0 * prox.distance[i] + 1.0;
        }
        const auto report = proximity_performance_report(input);
        for (const auto& c : report.cells) {
            if (c.covariate_set != "none") {
                CHECK_FALSE(c.computed);
                CHECK(c.note == "covariates explain a variable exactly");
            }
        }
    }
    SUBCASE("no covariates gives only plain cells") {
        input.covariates.clear();
        CHECK(proximity_performance_report(input).cells.size() == 3);
    }
    SUBCASE("join thresholds") {
        auto ids2 = ids;
        auto rows2 = rows;
        for (std::size_t i = 0; i < 30; ++i) {
            ids2.push_back("missing" + std::to_string(i));
            rows2.push_back({0.5, 0.5, 0.5});
        }
        input.performance = PerformanceTable::from_csv(perf_csv(ids2, rows2), "ours");
        const auto report = proximity_performance_report(input);
        CHECK(report.unmatched_performance.size() == 30);
        CHECK(report.unmatched_performance[0] == "scalars:missing0");
        CHECK(report.match_fraction == doctest::Approx(200.0 / 230.0));

        for (std::size_t i = 30; i < 80; ++i) {
            ids2.push_back("missing" + std::to_string(i));
            rows2.push_back({0.5, 0.5, 0.5});
        }
        input.performance = PerformanceTable::from_csv(perf_csv(ids2, rows2), "ours");
        CHECK_THROWS_AS(proximity_performance_report(input), InputError);
        input.min_match = 0.5;
        CHECK_NOTHROW(proximity_performance_report(input));
    }
}
