#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tabaudit::cli {

namespace fs = std::filesystem;

struct FeaturizeOptions {
    fs::path corpus;
    std::string schema = "full";
    std::string drop_scalar = "skewness_std";
    char delimiter = ',';
    fs::path out;
    unsigned workers = 1;
};

struct GenerateOptions {
    fs::path config; ///< empty: built-in defaults
    std::size_t n_tables = 200;
    std::size_t rows = 0; ///< fixed row count; 0 samples from [rows_min, rows_max]
    std::size_t rows_min = 64;
    std::size_t rows_max = 1024;
    std::size_t cols = 0; ///< fixed column count (target included)
    fs::path col_replay;  ///< full-schema features whose column counts are resampled
    std::uint64_t seed = 0;
    fs::path out;
    unsigned workers = 1;
};

struct CompareOptions {
    fs::path a;
    fs::path b;
    std::size_t k = 5;
    double percentile = 95.0;
    bool normalize = true;
    std::size_t n_boot = 200;
    std::size_t trees = 300;
    bool importance = false;
    std::uint64_t seed = 0;
    fs::path out;
    unsigned workers = 1;
};

struct AblateOptions {
    fs::path a;
    fs::path b;
    std::vector<std::size_t> k_values{1, 3, 5, 10, 20};
    std::vector<double> percentiles{80.0, 90.0, 95.0, 99.0};
    bool normalize = true;
    std::uint64_t seed = 0;
    fs::path out;
    unsigned workers = 1;
};

struct OptimizeOptions {
    std::string mode = "grid"; ///< grid, tpe, ga, tpe-triple, random
    fs::path real;
    std::size_t real_sample = 0; ///< 0: same as n_eval
    std::size_t grid = 1;
    std::size_t limit = 0; ///< grid only: evaluate the first N configurations
    std::size_t trials = 1000;
    std::size_t restarts = 50;
    std::size_t trials_per_restart = 20;
    std::size_t population = 16;
    std::size_t generations = 100;
    std::size_t n_eval = 200;
    std::size_t n_boot = 200;
    std::size_t trees = 100;
    std::size_t rows_min = 64;
    std::size_t rows_max = 1024;
    std::string triple_mode = "verbatim";
    std::size_t posthoc_top = 0;
    std::size_t posthoc_repeats = 5;
    bool resume = false;
    std::uint64_t seed = 0;
    fs::path out;
    unsigned workers = 1;
};

struct AnalyzeOptions {
    fs::path performance;
    std::string target;
    std::vector<fs::path> bench;
    std::vector<fs::path> reference;
    fs::path covariate_corpus; ///< benchmark tables; enables partial correlations
    bool include_target = false;
    std::size_t k = 5;
    double min_match = 0.8;
    fs::path out;
    unsigned workers = 1;
};

int cmd_featurize(const FeaturizeOptions& o);
int cmd_generate(const GenerateOptions& o);
int cmd_compare(const CompareOptions& o);
int cmd_ablate(const AblateOptions& o);
int cmd_optimize(const OptimizeOptions& o);
int cmd_analyze(const AnalyzeOptions& o);

} // namespace tabaudit::cli
