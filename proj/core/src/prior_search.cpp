#include "tabaudit/prior_search.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <unordered_map>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

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

FeatureMatrix head_rows(const FeatureMatrix& m, std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return m.select(idx);
}

void check_unit(const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError(std::string("triple_loss: ") + name + " must lie in [0, 1]");
    }
}

} // namespace

std::string_view to_string(TripleMode mode) noexcept {
    return mode == TripleMode::Verbatim ? "verbatim" : "complemented";
}

std::optional<TripleMode> parse_triple_mode(std::string_view s) noexcept {
    if (s == "verbatim") {
        return TripleMode::Verbatim;
    }
    if (s == "complemented") {
        return TripleMode::Complemented;
    }
    return std::nullopt;
}

double triple_loss(double recall, double precision, double auc, TripleMode mode) {
    check_unit("recall", recall);
    check_unit("precision", precision);
    check_unit("auc", auc);
    const double r = mode == TripleMode::Verbatim ? recall : 1.0 - recall;
    const double p = mode == TripleMode::Verbatim ? precision : 1.0 - precision;
    const double a = 2.0 * std::abs(0.5 - auc);
    return std::sqrt(r * r + p * p + a * a) / std::sqrt(3.0);
}

FeatureMatrix sample_rows(const FeatureMatrix& m, std::size_t n, std::uint64_t seed) {
    if (n > m.rows()) {
        throw DomainError("sample_rows: asked for " + std::to_string(n) + " of " + std::to_string(m.rows()) + " rows");
    }
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return m.select(idx);
}

RealReference RealReference::make(const FeatureMatrix& real_full, std::size_t n, std::uint64_t seed) {
    if (real_full.schema != SchemaId::Full) {
        throw DomainError("real reference needs full-schema features");
    }
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < real_full.rows(); ++i) {
        const auto c = static_cast<std::size_t>(std::llround(real_full.values(i, 0)));
        if (c >= 2) {
            counts.push_back(c);
        }
    }
    if (counts.empty()) {
        throw DomainError("real reference: no table has two or more columns");
    }
    RealReference ref{sample_rows(real_full, n, seed), ColumnCountSampler(std::move(counts)), PriorConfig{}};
    ref.base.min_cols = ref.columns.min();
    ref.base.max_cols = ref.columns.max();
    return ref;
}

ConfigEvaluation evaluate_config(const PriorConfig& theta_in, const RealReference& real,
                                 const PriorEvalOptions& options, bool with_coverage, std::uint64_t seed) {
    PriorConfig theta = theta_in;
    theta.min_cols = std::min(theta.min_cols, real.columns.min());
    theta.max_cols = std::max(theta.max_cols, real.columns.max());
    if (real.sample.rows() < options.n_eval) {
        throw DomainError("evaluate_config: real sample has fewer than n_eval rows");
    }
    const auto corpus = generate_corpus(theta, options.n_eval, real.columns, options.rows, derive_seed(seed, 0),
                                        options.workers, options.replay);
    const auto synthetic = featurize_corpus(corpus, SchemaId::Full, options.features, options.workers);
    const std::size_t m = std::min(synthetic.rows(), options.n_eval);

    const auto a = head_rows(real.sample, m);
    const auto b = head_rows(synthetic, m);
    ConfigEvaluation out;
    out.n_synthetic = m;
    out.auc = bootstrap_auc(a, b, options.gbdt, options.n_boot, derive_seed(seed, 1), options.workers);
    if (with_coverage) {
        out.coverage = coverage_pair(a, b, options.coverage, options.workers);
    }
    return out;
}

Evaluation evaluate_config_auc(const PriorConfig& theta, const RealReference& real, const PriorEvalOptions& options,
                               std::uint64_t seed) {
    const auto r = evaluate_config(theta, real, options, false, seed);
    Evaluation e;
    e.value = r.auc.mean_auc;
    e.auc = r.auc.mean_auc;
    e.n_eval = r.n_synthetic;
    return e;
}

Evaluation evaluate_config_triple(const PriorConfig& theta, const RealReference& real,
                                  const PriorEvalOptions& options, TripleMode mode, std::uint64_t seed) {
    const auto r = evaluate_config(theta, real, options, true, seed);
    Evaluation e;
    e.auc = r.auc.mean_auc;
    e.recall = r.coverage->recall;
    e.precision = r.coverage->precision;
    e.value = triple_loss(e.recall, e.precision, e.auc, mode);
    e.n_eval = r.n_synthetic;
    return e;
}

Objective auc_objective(const RealReference& real, const PriorEvalOptions& options) {
    Objective o;
    o.name = "auc";
    o.worst = 1.0;
    o.evaluate = [&real, options](const ParamPoint& point, const TrialContext& ctx) {
        return evaluate_config_auc(to_prior_config(point, real.base), real, options, ctx.seed);
    };
    return o;
}

Objective triple_objective(const RealReference& real, const PriorEvalOptions& options, TripleMode mode) {
    Objective o;
    o.name = std::string("triple_") + std::string(to_string(mode));
    o.worst = 1.0;
    o.evaluate = [&real, options, mode](const ParamPoint& point, const TrialContext& ctx) {
        return evaluate_config_triple(to_prior_config(point, real.base), real, options, mode, ctx.seed);
    };
    return o;
}

GridSearchResult grid_search(const Objective& objective, const std::vector<ParamPoint>& grid,
                             std::uint64_t master_seed, unsigned workers, const TrialObserver& observer,
                             const std::vector<TrialRecord>& done) {
    std::unordered_map<std::size_t, const TrialRecord*> finished;
    for (const auto& r : done) {
        finished[r.index] = &r;
    }
    GridSearchResult result;
    result.trials.resize(grid.size());
    std::vector<char> ready(grid.size(), 0);
    std::size_t emitted = 0;
    std::mutex emit_mutex;

    parallel_for(grid.size(), workers, [&](std::size_t i) {
        TrialRecord record;
        if (const auto it = finished.find(i); it != finished.end()) {
            record = *it->second;
        } else {
            record = run_trial(objective, grid[i], {i, derive_seed(master_seed, i)});
        }
        std::lock_guard lock(emit_mutex);
        result.trials[i] = std::move(record);
        ready[i] = 1;
        while (emitted < grid.size() && ready[emitted]) {
            if (observer && !finished.count(emitted)) {
                observer(result.trials[emitted]);
            }
            ++emitted;
        }
    });

    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        if (result.trials[i].failed) {
            ++result.n_failed;
        } else {
            result.ranking.push_back(i);
        }
    }
    std::stable_sort(result.ranking.begin(), result.ranking.end(), [&](std::size_t a, std::size_t b) {
        return result.trials[a].value() < result.trials[b].value();
    });
    return result;
}

std::string ranked_trials_csv(const SearchSpace& space, const GridSearchResult& result) {
    std::string out = "rank," + trials_csv_header(space) + "\n";
    std::size_t rank = 1;
    for (auto i : result.ranking) {
        out += std::to_string(rank++) + "," + trial_csv_row(space, result.trials[i]) + "\n";
    }
    for (const auto& t : result.trials) {
        if (t.failed) {
            out += "," + trial_csv_row(space, t) + "\n";
        }
    }
    return out;
}

std::string value_histogram_csv(const std::vector<TrialRecord>& trials, std::size_t bins) {
    if (bins == 0) {
        throw DomainError("value_histogram_csv: bins must be positive");
    }
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& t : trials) {
        if (t.failed) {
            continue;
        }
        const double v = std::clamp(t.value(), 0.0, 1.0);
        counts[std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)))]++;
    }
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < bins; ++b) {
        out += fmt(static_cast<double>(b) / static_cast<double>(bins)) + "," +
               fmt(static_cast<double>(b + 1) / static_cast<double>(bins)) + "," + std::to_string(counts[b]) + "\n";
    }
    return out;
}

PosthocReport posthoc_evaluate(const std::vector<PriorConfig>& configs, const FeatureMatrix& real_full,
                               const PriorEvalOptions& options, std::size_t repeats, std::uint64_t seed) {
    if (repeats == 0) {
        throw DomainError("posthoc_evaluate: repeats must be positive");
    }
    if (real_full.rows() < options.n_eval) {
        throw DomainError("posthoc_evaluate: real features have fewer rows than n");
    }
    PosthocReport report;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const std::uint64_t config_seed = derive_seed(seed, c);
        std::vector<double> means;
        double recall_sum = 0.0;
        double precision_sum = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
            const std::uint64_t s = derive_seed(config_seed, r);
            const auto ref = RealReference::make(real_full, options.n_eval, mix_seed(s));
            const auto ev = evaluate_config(configs[c], ref, options, true, s);
            PosthocRow row{c, r, ev.auc.mean_auc, ev.auc.std_auc, ev.coverage->recall, ev.coverage->precision};
            means.push_back(row.auc_mean);
            recall_sum += row.recall;
            precision_sum += row.precision;
            report.rows.push_back(row);
        }
        const auto summary = summarize_auc(means);
        PosthocSummary s;
        s.config = c;
        s.theta = configs[c];
        s.auc_mean = summary.mean_auc;
        s.auc_std = summary.std_auc;
        s.recall = recall_sum / static_cast<double>(repeats);
        s.precision = precision_sum / static_cast<double>(repeats);
        report.summaries.push_back(s);
    }
    return report;
}

std::string posthoc_rows_csv(const PosthocReport& report) {
    std::string out = "config,repeat,auc_mean,auc_std,recall,precision\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.config) + "," + std::to_string(r.repeat) + "," + fmt(r.auc_mean) + "," +
               fmt(r.auc_std) + "," + fmt(r.recall) + "," + fmt(r.precision) + "\n";
    }
    return out;
}

std::string posthoc_summary_csv(const PosthocReport& report) {
    std::string out = "config,auc_mean,auc_std,recall,precision\n";
    for (const auto& s : report.summaries) {
        out += std::to_string(s.config) + "," + fmt(s.auc_mean) + "," + fmt(s.auc_std) + "," + fmt(s.recall) + "," +
               fmt(s.precision) + "\n";
    }
    return out;
}

MultiRestartResult multi_restart_tpe(const Objective& objective, const SearchSpace& space, std::size_t restarts,
                                     std::size_t trials_per, std::uint64_t master_seed, std::size_t n_startup,
                                     const TrialObserver& observer) {
    if (restarts == 0) {
        throw DomainError("multi_restart_tpe: restarts must be positive");
    }
    TpeParams params;
    params.n_trials = trials_per;
    params.n_startup = std::min(n_startup, trials_per);
    MultiRestartResult out;
    for (std::size_t r = 0; r < restarts; ++r) {
        auto run = tpe_optimize(objective, space, params, derive_seed(master_seed, r), observer,
                                RunLabel{r * trials_per, r});
        out.best_per_restart.push_back(out.trials.size() + run.best);
        for (auto& t : run.trials) {
            out.trials.push_back(std::move(t));
        }
    }
    out.pareto = pareto_front(out.trials);
    return out;
}

std::vector<std::size_t> pareto_front(const std::vector<TrialRecord>& trials) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& e = trials[i].eval;
        if (!trials[i].failed && !std::isnan(e.recall) && !std::isnan(e.precision)) {
            candidates.push_back(i);
        }
    }
    std::vector<std::size_t> front;
    for (auto i : candidates) {
        const auto& a = trials[i].eval;
        bool dominated = false;
        for (auto j : candidates) {
            const auto& b = trials[j].eval;
            if (b.recall >= a.recall && b.precision >= a.precision &&
                (b.recall > a.recall || b.precision > a.precision)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) {
            front.push_back(i);
        }
    }
    return front;
}

} // namespace tabaudit
