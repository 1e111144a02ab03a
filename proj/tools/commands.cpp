#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "run_record.hpp"
#include "tabaudit/analysis.hpp"
#include "tabaudit/corpus.hpp"
#include "tabaudit/coverage.hpp"
#include "tabaudit/csv.hpp"
#include "tabaudit/discriminator.hpp"
#include "tabaudit/error.hpp"
#include "tabaudit/feature_matrix.hpp"
#include "tabaudit/ga.hpp"
#include "tabaudit/generator.hpp"
#include "tabaudit/parallel.hpp"
#include "tabaudit/prior_search.hpp"
#include "tabaudit/tpe.hpp"

namespace tabaudit::cli {

using json = nlohmann::ordered_json;

namespace {

/// Runs `body` inside a RunRecord; failures are recorded in run.json and
/// reported on stderr with exit code 1.
int run_command(const std::string& name, const fs::path& out, const std::function<void(RunRecord&)>& body) {
    if (out.empty()) {
        std::cerr << name << ": --out is required\n";
        return 2;
    }
    RunRecord rec(name, out);
    try {
        body(rec);
        rec.finish("ok");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << name << ": " << e.what() << '\n';
        try {
            rec.finish("error", e.what());
        } catch (const std::exception& inner) {
            std::cerr << name << ": could not write run.json: " << inner.what() << '\n';
        }
        return 1;
    }
}

/// JSON has no NaN; unmeasured values become null.
json number(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

FeatureMatrix read_features(RunRecord& rec, const std::string& role, const fs::path& path) {
    rec.add_input(role, path);
    return read_feature_matrix(path);
}

/// Down-samples the larger matrix so both have the same row count.
void equalize(FeatureMatrix& a, FeatureMatrix& b, std::uint64_t seed) {
    if (a.rows() > b.rows()) {
        a = sample_rows(a, b.rows(), seed);
    } else if (b.rows() > a.rows()) {
        b = sample_rows(b, a.rows(), seed);
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Normalization normalization(bool on) {
    return on ? Normalization::JointMinMax : Normalization::None;
}

} // namespace

int cmd_featurize(const FeaturizeOptions& o) {
    const auto schema = parse_schema(o.schema);
    if (!schema) {
        std::cerr << "featurize: unknown schema '" << o.schema << "'\n";
        return 2;
    }
    const auto dropped = parse_scalar_field(o.drop_scalar);
    if (!dropped) {
        std::cerr << "featurize: unknown scalar field '" << o.drop_scalar << "'\n";
        return 2;
    }
    return run_command("featurize", o.out, [&](RunRecord& rec) {
        FeatureOptions fo;
        fo.dropped_scalar = *dropped;
        rec.config() = {{"corpus", o.corpus.string()},
                        {"schema", o.schema},
                        {"drop_scalar", o.drop_scalar},
                        {"delimiter", std::string(1, o.delimiter)},
                        {"feature_version", fo.version()},
                        {"workers", o.workers}};
        rec.add_input("corpus", o.corpus);

        rec.begin_phase("load");
        LoadOptions lo;
        lo.delimiter = o.delimiter;
        const auto corpus = open_corpus(o.corpus, lo, o.workers);

        rec.begin_phase("featurize");
        FeaturizeReport report;
        const auto features = featurize_corpus(corpus, *schema, fo, o.workers, &report);

        rec.begin_phase("write");
        write_feature_matrix(features, rec.dir() / "features.tfm");
        rec.record_output("features.tfm");
        rec.write_output("features.csv", feature_matrix_to_csv(features));
        std::string skipped = "source_id,reason\n";
        for (const auto& s : report.skipped) {
            skipped += csv::join({s.source_id, s.reason}, ',') + "\n";
        }
        rec.write_output("skipped.csv", skipped);
        rec.note("rows=" + std::to_string(features.rows()) + " skipped=" + std::to_string(report.skipped.size()));
        std::cout << "featurize: " << report.tables_attempted << " tables, " << features.rows() << " rows x "
                  << features.dim() << " features, " << report.skipped.size() << " skipped\n";
    });
}

int cmd_generate(const GenerateOptions& o) {
    return run_command("generate", o.out, [&](RunRecord& rec) {
        PriorConfig theta;
        if (!o.config.empty()) {
            rec.add_input("config", o.config);
            theta = load_prior_config(o.config.string());
        }
        theta.validate();

        if ((o.cols == 0) == o.col_replay.empty()) {
            throw InputError("generate: give exactly one of --cols and --col-replay");
        }
        auto cols = ColumnCountSampler::constant(std::max<std::size_t>(o.cols, 2));
        if (!o.col_replay.empty()) {
            cols = ColumnCountSampler::from_features(read_features(rec, "col_replay", o.col_replay));
        }
        const RowCountSampler rows = o.rows > 0 ? RowCountSampler(o.rows, o.rows) : RowCountSampler(o.rows_min, o.rows_max);

        rec.config() = {{"theta", theta.to_text()},
                        {"n_tables", o.n_tables},
                        {"rows", o.rows > 0 ? json(o.rows) : json(nullptr)},
                        {"rows_min", rows.lo()},
                        {"rows_max", rows.hi()},
                        {"cols", o.cols > 0 ? json(o.cols) : json(nullptr)},
                        {"col_replay", o.col_replay.string()},
                        {"seed", o.seed},
                        {"workers", o.workers}};

        rec.begin_phase("generate");
        CorpusGenerationStats stats;
        const auto corpus = generate_corpus(theta, o.n_tables, cols, rows, o.seed, o.workers, {}, &stats);

        rec.begin_phase("write");
        const auto manifest = write_corpus(corpus, rec.dir() / "tables");
        for (const auto& m : manifest) {
            rec.record_output(fs::path("tables") / m.path);
        }
        rec.record_output("tables/manifest.json");
        rec.note("fresh=" + std::to_string(stats.fresh) + " replayed=" + std::to_string(stats.replayed));
        std::cout << "generate: " << manifest.size() << " tables (" << stats.fresh << " fresh, " << stats.replayed
                  << " replayed)\n";
    });
}

int cmd_compare(const CompareOptions& o) {
    return run_command("compare", o.out, [&](RunRecord& rec) {
        CoverageParams cp{o.k, o.percentile, normalization(o.normalize)};
        cp.validate();
        GbdtParams gp;
        gp.n_trees = o.trees;
        gp.validate();
        rec.config() = {{"a", o.a.string()},   {"b", o.b.string()},         {"k", o.k},
                        {"percentile", o.percentile}, {"normalize", o.normalize}, {"n_boot", o.n_boot},
                        {"trees", o.trees},    {"importance", o.importance}, {"seed", o.seed},
                        {"workers", o.workers}};

        rec.begin_phase("load");
        auto a = read_features(rec, "a", o.a);
        auto b = read_features(rec, "b", o.b);
        require_compatible(a, b);
        equalize(a, b, derive_seed(o.seed, 0));

        rec.begin_phase("discriminate");
        const auto auc = bootstrap_auc(a, b, gp, o.n_boot, derive_seed(o.seed, 1), o.workers);

        rec.begin_phase("coverage");
        const auto cov = coverage_pair(a, b, cp, o.workers);

        rec.begin_phase("write");
        json report = {{"schema", std::string(schema_info(a.schema).name)},
                       {"n", a.rows()},
                       {"auc_mean", auc.mean_auc},
                       {"auc_std", auc.std_auc},
                       {"n_bootstrap", auc.n_bootstrap},
                       {"recall", cov.recall},
                       {"precision", cov.precision},
                       {"delta", cov.delta},
                       {"delta_precision", cov.delta_precision},
                       {"k", cov.k},
                       {"percentile", cov.percentile},
                       {"self_comparison", cov.self_comparison}};
        rec.write_output("compare.json", report.dump(2) + "\n");

        std::string per_rep = "repetition,auc\n";
        for (std::size_t i = 0; i < auc.per_rep_auc.size(); ++i) {
            std::ostringstream line;
            line.precision(17);
            line << i << ',' << auc.per_rep_auc[i] << '\n';
            per_rep += line.str();
        }
        rec.write_output("bootstrap_auc.csv", per_rep);

        if (o.importance) {
            rec.begin_phase("importance");
            const auto shares = discriminator_importance(a, b, gp, derive_seed(o.seed, 2));
            rec.write_output("importance.csv", importance_to_csv(feature_names(a.schema), shares));
        }
        std::cout << "compare: n=" << a.rows() << " auc=" << auc.mean_auc << " +/- " << auc.std_auc
                  << " recall=" << cov.recall << " precision=" << cov.precision << '\n';
    });
}

int cmd_ablate(const AblateOptions& o) {
    return run_command("ablate", o.out, [&](RunRecord& rec) {
        rec.config() = {{"a", o.a.string()},
                        {"b", o.b.string()},
                        {"k_values", o.k_values},
                        {"percentiles", o.percentiles},
                        {"normalize", o.normalize},
                        {"seed", o.seed},
                        {"workers", o.workers}};
        rec.begin_phase("load");
        auto a = read_features(rec, "a", o.a);
        auto b = read_features(rec, "b", o.b);
        require_compatible(a, b);
        equalize(a, b, derive_seed(o.seed, 0));

        rec.begin_phase("sweep");
        const auto cells = ablation_sweep(a, b, o.k_values, o.percentiles, normalization(o.normalize), o.workers);
        rec.begin_phase("write");
        rec.write_output("ablation.csv", ablation_to_csv(cells));
        std::cout << "ablate: " << cells.size() << " cells over n=" << a.rows() << '\n';
    });
}

int cmd_optimize(const OptimizeOptions& o) {
    static const std::set<std::string> modes{"grid", "tpe", "ga", "tpe-triple", "random"};
    if (!modes.count(o.mode)) {
        std::cerr << "optimize: unknown mode '" << o.mode << "'\n";
        return 2;
    }
    const auto triple = parse_triple_mode(o.triple_mode);
    if (!triple) {
        std::cerr << "optimize: unknown triple mode '" << o.triple_mode << "'\n";
        return 2;
    }
    return run_command("optimize", o.out, [&](RunRecord& rec) {
        const auto space = prior_search_space();
        PriorEvalOptions eval;
        eval.n_eval = o.n_eval;
        eval.n_boot = o.n_boot;
        eval.gbdt.n_trees = o.trees;
        eval.gbdt.validate();
        eval.rows = RowCountSampler(o.rows_min, o.rows_max);
        // Grid trials run in parallel; sequential searches parallelise inside a trial.
        eval.workers = o.mode == "grid" ? 1 : o.workers;
        const std::size_t real_n = o.real_sample > 0 ? o.real_sample : o.n_eval;

        rec.config() = {{"mode", o.mode},
                        {"real", o.real.string()},
                        {"real_sample", real_n},
                        {"grid", o.grid},
                        {"limit", o.limit},
                        {"trials", o.trials},
                        {"restarts", o.restarts},
                        {"trials_per_restart", o.trials_per_restart},
                        {"population", o.population},
                        {"generations", o.generations},
                        {"n_eval", o.n_eval},
                        {"n_boot", o.n_boot},
                        {"trees", o.trees},
                        {"rows_min", o.rows_min},
                        {"rows_max", o.rows_max},
                        {"triple_mode", o.triple_mode},
                        {"posthoc_top", o.posthoc_top},
                        {"posthoc_repeats", o.posthoc_repeats},
                        {"resume", o.resume},
                        {"seed", o.seed},
                        {"workers", o.workers}};

        rec.begin_phase("load");
        const auto real_full = read_features(rec, "real", o.real);
        const auto real = RealReference::make(real_full, real_n, derive_seed(o.seed, 0));
        const std::uint64_t master = derive_seed(o.seed, 1);

        TrialJournal journal(rec.dir() / "journal.csv", space, o.resume);
        std::set<std::size_t> journaled;
        for (const auto& r : journal.existing()) {
            journaled.insert(r.index);
        }
        if (!journaled.empty()) {
            std::cerr << "optimize: resuming with " << journaled.size() << " journaled trials\n";
        }
        const TrialObserver observer = [&](const TrialRecord& r) {
            if (!journaled.count(r.index)) {
                journal.append(r);
            }
        };

        const Objective objective = o.mode == "tpe-triple" ? triple_objective(real, eval, *triple)
                                                            : auc_objective(real, eval);
        const Objective replay = replaying(objective, journal.existing());

        rec.begin_phase("search");
        std::vector<TrialRecord> trials;
        std::vector<std::size_t> order; // trial positions, best first
        if (o.mode == "grid") {
            auto grid = grid_enumerate(space, o.grid);
            std::cerr << "optimize: grid G=" << o.grid << " has " << grid.size() << " configurations (closed form "
                      << prior_grid_count(o.grid) << ")";
            if (o.limit > 0 && o.limit < grid.size()) {
                grid.resize(o.limit);
                std::cerr << "; evaluating the first " << o.limit;
            }
            std::cerr << '\n';
            auto result = grid_search(objective, grid, master, o.workers, observer, journal.existing());
            rec.write_output("ranked.csv", ranked_trials_csv(space, result));
            rec.write_output("histogram.csv", value_histogram_csv(result.trials));
            trials = std::move(result.trials);
            order = std::move(result.ranking);
        } else if (o.mode == "tpe-triple") {
            auto result = multi_restart_tpe(replay, space, o.restarts, o.trials_per_restart, master, 10, observer);
            std::vector<TrialRecord> front;
            for (auto i : result.pareto) {
                front.push_back(result.trials[i]);
            }
            rec.write_output("pareto.csv", trials_to_csv(space, front));
            trials = std::move(result.trials);
        } else {
            SearchResult result;
            if (o.mode == "tpe") {
                TpeParams tp;
                tp.n_trials = o.trials;
                result = tpe_optimize(replay, space, tp, master, observer);
            } else if (o.mode == "ga") {
                GaParams gp;
                gp.population = o.population;
                gp.generations = o.generations;
                result = ga_optimize(replay, space, gp, master, observer);
            } else {
                result = random_search(replay, space, o.trials, master, observer);
            }
            std::string curve = "trial,best_so_far\n";
            for (std::size_t i = 0; i < result.best_so_far.size(); ++i) {
                std::ostringstream line;
                line.precision(17);
                line << i << ',' << result.best_so_far[i] << '\n';
                curve += line.str();
            }
            rec.write_output("convergence.csv", curve);
            trials = std::move(result.trials);
        }
        if (order.empty()) {
            for (std::size_t i = 0; i < trials.size(); ++i) {
                if (!trials[i].failed) {
                    order.push_back(i);
                }
            }
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return trials[a].value() < trials[b].value(); });
        }

        rec.begin_phase("write");
        rec.write_output("trials.csv", trials_to_csv(space, trials));
        rec.write_output("trial_timings.csv", timings_to_csv(trials));
        rec.record_output("journal.csv");
        if (order.empty()) {
            throw Error("optimize: every trial failed");
        }
        const auto& best = trials[order.front()];
        rec.write_output("best.cfg", to_prior_config(best.point, real.base).to_text());
        std::cout << "optimize: " << trials.size() << " trials, best value " << best.value() << " at trial "
                  << best.index << '\n';

        if (o.posthoc_top > 0) {
            rec.begin_phase("posthoc");
            std::vector<PriorConfig> configs;
            for (std::size_t i = 0; i < std::min(o.posthoc_top, order.size()); ++i) {
                configs.push_back(to_prior_config(trials[order[i]].point, real.base));
            }
            const auto ph = posthoc_evaluate(configs, real_full, eval, o.posthoc_repeats, derive_seed(o.seed, 2));
            rec.write_output("posthoc_rows.csv", posthoc_rows_csv(ph));
            rec.write_output("posthoc_summary.csv", posthoc_summary_csv(ph));
        }
    });
}

int cmd_analyze(const AnalyzeOptions& o) {
    return run_command("analyze", o.out, [&](RunRecord& rec) {
        if (o.bench.empty() || o.bench.size() != o.reference.size()) {
            throw InputError("analyze: give one --reference per --bench feature file");
        }
        rec.config() = {{"performance", o.performance.string()},
                        {"target", o.target},
                        {"covariate_corpus", o.covariate_corpus.string()},
                        {"include_target", o.include_target},
                        {"k", o.k},
                        {"min_match", o.min_match},
                        {"workers", o.workers}};

        rec.begin_phase("load");
        rec.add_input("performance", o.performance);
        AnalysisInput in;
        in.performance = PerformanceTable::from_csv(read_text(o.performance), o.target);
        in.k = o.k;
        in.min_match = o.min_match;
        in.exclude_target = !o.include_target;
        for (std::size_t i = 0; i < o.bench.size(); ++i) {
            in.features.emplace_back(read_features(rec, "bench", o.bench[i]),
                                     read_features(rec, "reference", o.reference[i]));
        }
        if (!o.covariate_corpus.empty()) {
            rec.add_input("covariate_corpus", o.covariate_corpus);
            const auto corpus = open_corpus(o.covariate_corpus, {}, o.workers);
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                const auto table = corpus.table(i);
                try {
                    in.covariates[dataset_key(table->source_id())] = table_covariates(*table);
                } catch (const Error& e) {
                    rec.note("covariates skipped for " + table->source_id() + ": " + e.what());
                }
            }
        }

        rec.begin_phase("analyze");
        const auto report = proximity_performance_report(in);
        const std::size_t unmatched = report.unmatched_performance.size();
        if (unmatched > 0) {
            std::cerr << "analyze: warning: " << unmatched << " performance ids without features\n";
            rec.note("unmatched performance ids: " + std::to_string(unmatched));
        }

        rec.begin_phase("write");
        json cells = json::array();
        for (const auto& c : report.cells) {
            cells.push_back({{"schema", c.schema},
                             {"metric", std::string(to_string(c.metric))},
                             {"covariates", c.covariate_set},
                             {"computed", c.computed},
                             {"r", c.computed ? number(c.report.r) : json(nullptr)},
                             {"p", c.computed ? number(c.report.p) : json(nullptr)},
                             {"n", c.report.n},
                             {"df", c.report.df},
                             {"direction", c.direction},
                             {"note", c.note}});
        }
        json schemas = json::array();
        for (const auto& s : report.schemas) {
            schemas.push_back({{"schema", s.schema},
                               {"n_datasets", s.n_datasets},
                               {"recall", number(s.recall)},
                               {"precision", number(s.precision)}});
        }
        json out = {{"target", o.target},
                    {"exclude_target", report.exclude_target},
                    {"rel_mean_definition", "target / arithmetic mean of the comparison models"},
                    {"rel_best_definition", "target / best comparison model"},
                    {"match_fraction", report.match_fraction},
                    {"detectable_r", number(report.detectable_r)},
                    {"unmatched_performance", report.unmatched_performance},
                    {"unmatched_features", report.unmatched_features},
                    {"schemas", schemas},
                    {"cells", cells}};
        rec.write_output("report.json", out.dump(2) + "\n");
        rec.write_output("cells.csv", correlation_cells_csv(report));
        rec.write_output("scatter.csv", scatter_csv(report));
        std::cout << "analyze: " << report.cells.size() << " correlation cells over " << report.schemas.size()
                  << " schemas\n";
    });
}

} // namespace tabaudit::cli
