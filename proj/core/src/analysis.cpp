#include "tabaudit/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "tabaudit/csv.hpp"
#include "tabaudit/error.hpp"
#include "tabaudit/features.hpp"

namespace tabaudit {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void check_row(std::span<const double> metrics, std::size_t target) {
    if (metrics.size() < 2) {
        throw DomainError("performance row needs at least two models");
    }
    if (target >= metrics.size()) {
        throw DomainError("performance row has no target model");
    }
}

std::vector<double> others(std::span<const double> metrics, std::size_t target, bool exclude_target) {
    std::vector<double> out;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (i != target || !exclude_target) {
            out.push_back(metrics[i]);
        }
    }
    return out;
}

struct CovariateSet {
    std::string name;
    bool full = false;
};

} // namespace

std::size_t PerformanceTable::target_index() const {
    const auto it = std::find(models.begin(), models.end(), target);
    if (it == models.end()) {
        throw InputError("performance table has no column for model '" + target + "'");
    }
    return static_cast<std::size_t>(it - models.begin());
}

PerformanceTable PerformanceTable::from_csv(std::string_view text, const std::string& target) {
    const auto records = csv::parse(text, ',');
    if (records.size() < 2 || records.front().size() < 3) {
        throw InputError("performance table needs a header, one id column and at least two models");
    }
    PerformanceTable t;
    t.target = target;
    t.models.assign(records.front().begin() + 1, records.front().end());
    (void)t.target_index();
    t.values = DenseMatrix(0, t.models.size());
    std::vector<double> row(t.models.size());
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r];
        if (f.size() != t.models.size() + 1) {
            throw InputError("performance table row " + std::to_string(r) + " has the wrong number of fields");
        }
        for (std::size_t j = 0; j < t.models.size(); ++j) {
            const auto cell = csv::trim(f[j + 1]);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw InputError("performance table: bad value '" + std::string(cell) + "' in row " +
                                 std::to_string(r));
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InputError("performance table: value outside [0, 1] in row " + std::to_string(r));
            }
            row[j] = v;
        }
        t.ids.emplace_back(csv::trim(f[0]));
        t.values.append_row(row);
    }
    return t;
}

double model_rank(std::span<const double> metrics, std::size_t target) {
    check_row(metrics, target);
    const double t = metrics[target];
    double better = 0.0;
    double tied = 0.0;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (i == target) {
            continue;
        }
        if (metrics[i] > t) {
            better += 1.0;
        } else if (metrics[i] == t) {
            tied += 1.0;
        }
    }
    return 1.0 + better + 0.5 * tied;
}

double relative_auc_mean(std::span<const double> metrics, std::size_t target, bool exclude_target) {
    check_row(metrics, target);
    const auto rest = others(metrics, target, exclude_target);
    const double mean = std::accumulate(rest.begin(), rest.end(), 0.0) / static_cast<double>(rest.size());
    if (mean == 0.0) {
        throw DomainError("relative_auc_mean: benchmark mean is zero");
    }
    return metrics[target] / mean;
}

double relative_auc_best(std::span<const double> metrics, std::size_t target, bool exclude_target) {
    check_row(metrics, target);
    const auto rest = others(metrics, target, exclude_target);
    const double best = *std::max_element(rest.begin(), rest.end());
    if (best == 0.0) {
        throw DomainError("relative_auc_best: best benchmark value is zero");
    }
    return metrics[target] / best;
}

std::string_view to_string(PerformanceMetric m) noexcept {
    switch (m) {
    case PerformanceMetric::Rank: return "rank";
    case PerformanceMetric::RelativeMean: return "rel_mean";
    case PerformanceMetric::RelativeBest: return "rel_best";
    }
    return "?";
}

std::vector<double> performance_metric(const PerformanceTable& table, PerformanceMetric metric, bool exclude_target) {
    const std::size_t target = table.target_index();
    std::vector<double> out(table.ids.size());
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        const auto row = table.values.row(i);
        switch (metric) {
        case PerformanceMetric::Rank: out[i] = model_rank(row, target); break;
        case PerformanceMetric::RelativeMean: out[i] = relative_auc_mean(row, target, exclude_target); break;
        case PerformanceMetric::RelativeBest: out[i] = relative_auc_best(row, target, exclude_target); break;
        }
    }
    return out;
}

std::vector<double> proximity_scores(const FeatureMatrix& bench, const FeatureMatrix& reference, std::size_t k) {
    require_compatible(bench, reference);
    if (reference.rows() < k) {
        throw DomainError("proximity_scores: reference has fewer than k rows");
    }
    const auto [b, r] = joint_normalize(bench.values, reference.values);
    std::vector<double> out(b.rows());
    for (std::size_t i = 0; i < b.rows(); ++i) {
        out[i] = knn_mean_dist(b.row(i), r, k);
    }
    return out;
}

std::string dataset_key(const std::string& source_id) {
    return std::filesystem::path(source_id).stem().string();
}

DatasetProximity dataset_proximity(const FeatureMatrix& bench, const FeatureMatrix& reference, std::size_t k) {
    const auto scores = proximity_scores(bench, reference, k);
    DatasetProximity out;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::vector<double>> members;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto key = dataset_key(bench.origins[i].source_id);
        auto [it, inserted] = slot.emplace(key, out.ids.size());
        if (inserted) {
            out.ids.push_back(key);
            members.emplace_back();
        }
        members[it->second].push_back(scores[i]);
    }
    for (auto& m : members) {
        out.distance.push_back(order_invariant_sum(m) / static_cast<double>(m.size()));
    }
    return out;
}

double class_balance(const Column& label) {
    const auto counts = label.value_counts();
    if (counts.empty()) {
        throw DomainError("class_balance: label column has no values");
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    return static_cast<double>(*lo) / static_cast<double>(*hi);
}

TableCovariates table_covariates(const Table& table) {
    TableCovariates c;
    c.n_rows = static_cast<double>(table.n_rows());
    c.n_cols = static_cast<double>(table.n_cols());
    c.class_balance = class_balance(table.column(table.n_cols() - 1));
    const auto s = scalar_features(table);
    c.skewness = s.mean_skewness;
    c.kurtosis = s.mean_kurtosis;
    c.categorical_ratio = s.categorical_ratio;
    bool any_magnitude = false;
    bool any_missing = false;
    for (const auto& col : table.columns()) {
        any_magnitude = any_magnitude || is_magnitude_column(col);
        any_missing = any_missing || col.missing_count() > 0;
    }
    c.full_observed = any_magnitude && !any_missing;
    return c;
}

std::string direction_tag(double r, PerformanceMetric metric) {
    const double oriented = metric == PerformanceMetric::Rank ? -r : r;
    return oriented >= 0.0 ? "↑" : "↓";
}

ProximityReport proximity_performance_report(const AnalysisInput& input) {
    const auto& perf = input.performance;
    ProximityReport report;
    report.exclude_target = input.exclude_target;

    std::unordered_map<std::string, std::size_t> perf_row;
    for (std::size_t i = 0; i < perf.ids.size(); ++i) {
        perf_row.emplace(dataset_key(perf.ids[i]), i);
    }
    std::vector<std::vector<double>> metrics;
    for (auto m : kPerformanceMetrics) {
        metrics.push_back(performance_metric(perf, m, input.exclude_target));
    }

    std::vector<CovariateSet> sets;
    if (!input.covariates.empty()) {
        sets = {{"universal", false}, {"full", true}};
    }

    double min_fraction = 1.0;
    std::size_t min_matched = perf.ids.size();
    for (const auto& [bench, reference] : input.features) {
        const std::string schema{schema_info(bench.schema).name};
        const auto prox = dataset_proximity(bench, reference, input.k);

        std::vector<std::size_t> prox_idx;
        std::vector<std::size_t> perf_idx;
        std::vector<char> perf_hit(perf.ids.size(), 0);
        for (std::size_t i = 0; i < prox.ids.size(); ++i) {
            const auto it = perf_row.find(prox.ids[i]);
            if (it == perf_row.end()) {
                report.unmatched_features.push_back(schema + ":" + prox.ids[i]);
                continue;
            }
            prox_idx.push_back(i);
            perf_idx.push_back(it->second);
            perf_hit[it->second] = 1;
        }
        for (std::size_t i = 0; i < perf.ids.size(); ++i) {
            if (!perf_hit[i]) {
                report.unmatched_performance.push_back(schema + ":" + perf.ids[i]);
            }
        }
        const double fraction =
            perf.ids.empty() ? 0.0 : static_cast<double>(perf_idx.size()) / static_cast<double>(perf.ids.size());
        min_fraction = std::min(min_fraction, fraction);
        min_matched = std::min(min_matched, perf_idx.size());
        if (fraction < input.min_match) {
            throw InputError("analysis: only " + std::to_string(perf_idx.size()) + " of " +
                             std::to_string(perf.ids.size()) + " performance ids match '" + schema + "' features");
        }

        SchemaSummary summary;
        summary.schema = schema;
        summary.n_datasets = perf_idx.size();
        try {
            const auto cov = coverage_pair(bench, reference, CoverageParams{input.k, 95.0, Normalization::JointMinMax});
            summary.recall = cov.recall;
            summary.precision = cov.precision;
        } catch (const DomainError&) {
            summary.recall = std::numeric_limits<double>::quiet_NaN();
            summary.precision = std::numeric_limits<double>::quiet_NaN();
        }
        report.schemas.push_back(summary);

        std::vector<double> dist;
        for (auto i : prox_idx) {
            dist.push_back(prox.distance[i]);
        }
        for (std::size_t k = 0; k < prox_idx.size(); ++k) {
            const auto p = perf_idx[k];
            report.scatter.push_back({schema, prox.ids[prox_idx[k]], dist[k], metrics[0][p], metrics[1][p],
                                      metrics[2][p]});
        }

        for (std::size_t m = 0; m < std::size(kPerformanceMetrics); ++m) {
            const auto metric = kPerformanceMetrics[m];
            std::vector<double> y;
            for (auto p : perf_idx) {
                y.push_back(metrics[m][p]);
            }
            CorrelationCell cell{schema, metric, "none", {}, "", false, ""};
            try {
                cell.report = pearson(dist, y);
                cell.computed = true;
                cell.direction = direction_tag(cell.report.r, metric);
            } catch (const DomainError& e) {
                cell.note = e.what();
            }
            report.cells.push_back(cell);

            for (const auto& set : sets) {
                std::vector<double> xs;
                std::vector<double> ys;
                std::vector<double> zs;
                const std::size_t q = set.full ? 6 : 3;
                for (std::size_t k = 0; k < perf_idx.size(); ++k) {
                    const auto it = input.covariates.find(prox.ids[prox_idx[k]]);
                    if (it == input.covariates.end() || (set.full && !it->second.full_observed)) {
                        continue;
                    }
                    const auto& c = it->second;
                    xs.push_back(dist[k]);
                    ys.push_back(y[k]);
                    zs.insert(zs.end(), {c.n_rows, c.n_cols, c.class_balance});
                    if (set.full) {
                        zs.insert(zs.end(), {c.skewness, c.kurtosis, c.categorical_ratio});
                    }
                }
                CorrelationCell pc{schema, metric, set.name, {}, "", false, ""};
                try {
                    pc.report = partial_correlation(xs, ys, DenseMatrix(xs.size(), q, std::move(zs)));
                    pc.computed = !pc.report.degenerate;
                    pc.direction = pc.computed ? direction_tag(pc.report.r, metric) : "";
                    if (pc.report.degenerate) {
                        pc.note = "covariates explain a variable exactly";
                    }
                } catch (const DomainError& e) {
                    pc.note = e.what();
                }
                report.cells.push_back(pc);
            }
        }
    }
    report.match_fraction = input.features.empty() ? 0.0 : min_fraction;
    report.detectable_r = min_matched >= 4 ? detectable_r(min_matched) : std::numeric_limits<double>::quiet_NaN();
    return report;
}

std::string correlation_cells_csv(const ProximityReport& report) {
    std::string out = "schema,covariates,metric,r,p,n,df,direction,computed,note\n";
    for (const auto& c : report.cells) {
        csv::Record f{c.schema,
                      c.covariate_set,
                      std::string(to_string(c.metric)),
                      c.computed ? fmt(c.report.r) : "",
                      c.computed ? fmt(c.report.p) : "",
                      std::to_string(c.report.n),
                      std::to_string(c.report.df),
                      c.direction,
                      c.computed ? "1" : "0",
                      c.note};
        out += csv::join(f, ',') + "\n";
    }
    return out;
}

std::string scatter_csv(const ProximityReport& report) {
    std::string out = "schema,id,distance,rank,relative_mean,relative_best\n";
    for (const auto& s : report.scatter) {
        csv::Record f{s.schema, s.id, fmt(s.distance), fmt(s.rank), fmt(s.relative_mean), fmt(s.relative_best)};
        out += csv::join(f, ',') + "\n";
    }
    return out;
}

} // namespace tabaudit
