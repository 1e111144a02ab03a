#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_record.hpp"

using namespace tabaudit::cli;

int main(int argc, char** argv) {
    CLI::App app{"Audit synthetic tabular corpora against real ones"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    FeaturizeOptions fz;
    auto* featurize = app.add_subcommand("featurize", "Featurize every table in a corpus directory");
    featurize->add_option("--corpus", fz.corpus, "Directory of delimited tables")->required()->check(CLI::ExistingDirectory);
    featurize->add_option("--schema", fz.schema, "full, scalars, histograms, colhists or corrhists")
        ->capture_default_str();
    featurize->add_option("--drop-scalar", fz.drop_scalar, "Scalar summary left out of the Scalars block")
        ->capture_default_str();
    featurize->add_option("--delimiter", fz.delimiter, "Field delimiter")->capture_default_str();
    featurize->add_option("--out", fz.out, "Output directory")->required();
    featurize->add_option("--workers", fz.workers, "Worker threads")->capture_default_str();

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic corpus from a prior configuration");
    generate->add_option("--config", gen.config, "Prior configuration (key=value text)")->check(CLI::ExistingFile);
    generate->add_option("--n-tables", gen.n_tables, "Number of tables")->capture_default_str();
    generate->add_option("--rows", gen.rows, "Fixed row count (default: log-uniform in [rows-min, rows-max])");
    generate->add_option("--rows-min", gen.rows_min)->capture_default_str();
    generate->add_option("--rows-max", gen.rows_max)->capture_default_str();
    auto* gen_cols = generate->add_option("--cols", gen.cols, "Fixed column count, target included");
    generate->add_option("--col-replay", gen.col_replay, "Full-schema feature file whose column counts are replayed")
        ->check(CLI::ExistingFile)
        ->excludes(gen_cols);
    generate->add_option("--seed", gen.seed, "Master seed")->required();
    generate->add_option("--out", gen.out, "Output directory")->required();
    generate->add_option("--workers", gen.workers)->capture_default_str();

    CompareOptions cmp;
    auto* compare = app.add_subcommand("compare", "Discriminator AUC and k-NN coverage between two feature files");
    compare->add_option("--a", cmp.a, "First feature file")->required()->check(CLI::ExistingFile);
    compare->add_option("--b", cmp.b, "Second feature file")->required()->check(CLI::ExistingFile);
    compare->add_option("--k", cmp.k)->capture_default_str();
    compare->add_option("--percentile", cmp.percentile)->capture_default_str();
    compare->add_flag("!--no-normalize", cmp.normalize, "Skip joint min-max normalisation");
    compare->add_option("--n-boot", cmp.n_boot, "Bootstrap repetitions")->capture_default_str();
    compare->add_option("--trees", cmp.trees, "Boosting rounds")->capture_default_str();
    compare->add_flag("--importance", cmp.importance, "Also write discriminator feature importance");
    compare->add_option("--seed", cmp.seed)->required();
    compare->add_option("--out", cmp.out)->required();
    compare->add_option("--workers", cmp.workers)->capture_default_str();

    AblateOptions abl;
    auto* ablate = app.add_subcommand("ablate", "Coverage over a grid of k and threshold percentiles");
    ablate->add_option("--a", abl.a)->required()->check(CLI::ExistingFile);
    ablate->add_option("--b", abl.b)->required()->check(CLI::ExistingFile);
    ablate->add_option("--k-values", abl.k_values)->delimiter(',')->capture_default_str();
    ablate->add_option("--percentiles", abl.percentiles)->delimiter(',')->capture_default_str();
    ablate->add_flag("!--no-normalize", abl.normalize);
    ablate->add_option("--seed", abl.seed)->required();
    ablate->add_option("--out", abl.out)->required();
    ablate->add_option("--workers", abl.workers)->capture_default_str();

    OptimizeOptions opt;
    auto* optimize = app.add_subcommand("optimize", "Search prior configurations against a real feature file");
    optimize->add_option("--mode", opt.mode, "grid, tpe, ga, tpe-triple or random")->capture_default_str();
    optimize->add_option("--real", opt.real, "Full-schema features of the real corpus")
        ->required()
        ->check(CLI::ExistingFile);
    optimize->add_option("--real-sample", opt.real_sample, "Real rows per comparison (default: n-eval)");
    optimize->add_option("--grid", opt.grid, "Grid resolution G")->capture_default_str();
    optimize->add_option("--limit", opt.limit, "Grid: evaluate only the first N configurations");
    optimize->add_option("--trials", opt.trials, "Trials for tpe and random")->capture_default_str();
    optimize->add_option("--restarts", opt.restarts, "tpe-triple: independent optimisers")->capture_default_str();
    optimize->add_option("--trials-per-restart", opt.trials_per_restart)->capture_default_str();
    optimize->add_option("--population", opt.population)->capture_default_str();
    optimize->add_option("--generations", opt.generations)->capture_default_str();
    optimize->add_option("--n-eval", opt.n_eval, "Synthetic tables per evaluation")->capture_default_str();
    optimize->add_option("--n-boot", opt.n_boot)->capture_default_str();
    optimize->add_option("--trees", opt.trees)->capture_default_str();
    optimize->add_option("--rows-min", opt.rows_min)->capture_default_str();
    optimize->add_option("--rows-max", opt.rows_max)->capture_default_str();
    optimize->add_option("--triple-mode", opt.triple_mode, "verbatim or complemented")->capture_default_str();
    optimize->add_option("--posthoc-top", opt.posthoc_top, "Re-evaluate the N best configurations");
    optimize->add_option("--posthoc-repeats", opt.posthoc_repeats)->capture_default_str();
    optimize->add_flag("--resume", opt.resume, "Continue from the journal in the output directory");
    optimize->add_option("--seed", opt.seed)->required();
    optimize->add_option("--out", opt.out)->required();
    optimize->add_option("--workers", opt.workers)->capture_default_str();

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Correlate feature-space proximity with model performance");
    analyze->add_option("--performance", an.performance, "CSV: dataset id, then one column per model")
        ->required()
        ->check(CLI::ExistingFile);
    analyze->add_option("--target", an.target, "Model column under study")->required();
    analyze->add_option("--bench", an.bench, "Benchmark feature file (repeat per schema)")
        ->required()
        ->check(CLI::ExistingFile);
    analyze->add_option("--reference", an.reference, "Reference feature file, paired with --bench")
        ->required()
        ->check(CLI::ExistingFile);
    analyze->add_option("--covariates", an.covariate_corpus, "Benchmark table directory; enables partial correlations")
        ->check(CLI::ExistingDirectory);
    analyze->add_flag("--include-target", an.include_target, "Count the target among the comparison models");
    analyze->add_option("--k", an.k)->capture_default_str();
    analyze->add_option("--min-match", an.min_match)->capture_default_str();
    analyze->add_option("--out", an.out)->required();
    analyze->add_option("--workers", an.workers)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (featurize->parsed()) {
        return cmd_featurize(fz);
    }
    if (generate->parsed()) {
        return cmd_generate(gen);
    }
    if (compare->parsed()) {
        return cmd_compare(cmp);
    }
    if (ablate->parsed()) {
        return cmd_ablate(abl);
    }
    if (optimize->parsed()) {
        return cmd_optimize(opt);
    }
    return cmd_analyze(an);
}
