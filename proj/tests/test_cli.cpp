#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tabaudit/corpus.hpp"
#include "tabaudit/feature_matrix.hpp"

using namespace tabaudit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "tabaudit_cli_test";

struct RunResult {
    int code = 0;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunResult run(const std::string& args) {
    const auto out = kWork / "stdout.txt";
    const auto err = kWork / "stderr.txt";
    const std::string cmd = std::string("\"") + TABAUDIT_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t line_count(const fs::path& p) {
    const auto text = slurp(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Checks the subset of JSON Schema the report schema uses.
std::vector<std::string> validate(const json& doc, const json& schema) {
    std::vector<std::string> problems;
    if (!doc.is_object()) {
        return {"not an object"};
    }
    for (const auto& key : schema.at("required")) {
        if (!doc.contains(key.get<std::string>())) {
            problems.push_back("missing " + key.get<std::string>());
        }
    }
    const auto& props = schema.at("properties");
    for (const auto& [key, value] : doc.items()) {
        if (!props.contains(key)) {
            if (!schema.value("additionalProperties", true)) {
                problems.push_back("unexpected " + key);
            }
            continue;
        }
        const auto& p = props.at(key);
        const auto type = p.at("type").get<std::string>();
        const bool ok = (type == "string" && value.is_string()) || (type == "boolean" && value.is_boolean()) ||
                        (type == "integer" && value.is_number_integer()) ||
                        (type == "number" && value.is_number());
        if (!ok) {
            problems.push_back(key + " has the wrong type");
            continue;
        }
        if (value.is_number()) {
            const double v = value.get<double>();
            if (p.contains("minimum") && v < p["minimum"].get<double>()) problems.push_back(key + " below minimum");
            if (p.contains("maximum") && v > p["maximum"].get<double>()) problems.push_back(key + " above maximum");
            if (p.contains("exclusiveMinimum") && v <= p["exclusiveMinimum"].get<double>()) {
                problems.push_back(key + " not above exclusive minimum");
            }
        }
    }
    return problems;
}

/// Ten small real-looking tables with 3, 4 or 6 columns.
const fs::path& real_corpus() {
    static const fs::path dir = [] {
        const auto d = kWork / "real";
        fs::create_directories(d);
        std::mt19937_64 rng(5);
        const std::size_t widths[] = {3, 4, 6};
        for (int i = 0; i < 10; ++i) {
            std::ofstream(d / ("t" + std::to_string(i) + ".csv"))
                << testing::random_table_text(rng, 60 + 10 * i, widths[i % 3], 0.0);
        }
        return d;
    }();
    return dir;
}

/// 200 generated tables and their full-schema features.
const fs::path& synthetic_features() {
    static const fs::path file = [] {
        const auto gen = run("generate --n-tables 200 --cols 5 --rows-min 40 --rows-max 120 --seed 3 --out \"" +
                             (kWork / "syn").string() + "\"");
        REQUIRE(gen.code == 0);
        const auto fz = run("featurize --corpus \"" + (kWork / "syn" / "tables").string() + "\" --out \"" +
                            (kWork / "syn_features").string() + "\"");
        REQUIRE(fz.code == 0);
        return kWork / "syn_features" / "features.tfm";
    }();
    return file;
}

struct Setup {
    Setup() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};
const Setup setup_once;

} // namespace

TEST_CASE("version and usage") {
    const auto v = run("--version");
    CHECK(v.code == 0);
    CHECK(v.out.find("tabaudit") != std::string::npos);
    CHECK(run("").code != 0);
    CHECK(run("frobnicate").code != 0);
}

TEST_CASE("featurize") {
    const auto out = kWork / "fz1";
    const auto r = run("featurize --corpus \"" + real_corpus().string() + "\" --out \"" + out.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("featurize: 10 tables") != std::string::npos);
    const auto m = read_feature_matrix(out / "features.tfm");
    CHECK(m.rows() == 10);
    CHECK(m.dim() == 70);
    CHECK(line_count(out / "features.csv") == 11);
    CHECK(fs::exists(out / "run.json"));
    CHECK(fs::exists(out / "timings.csv"));
    const auto run_json = json::parse(slurp(out / "run.json"));
    CHECK(run_json["status"] == "ok");
    CHECK(run_json["command"] == "featurize");

    const auto again = kWork / "fz2";
    REQUIRE(run("featurize --workers 3 --corpus \"" + real_corpus().string() + "\" --out \"" + again.string() + "\"")
                .code == 0);
    CHECK(slurp(out / "features.tfm") == slurp(again / "features.tfm"));
    CHECK(json::parse(slurp(again / "run.json"))["outputs"] == run_json["outputs"]);

    const auto cols = kWork / "fz_cols";
    REQUIRE(run("featurize --schema colhists --corpus \"" + real_corpus().string() + "\" --out \"" + cols.string() +
                "\"")
                .code == 0);
    CHECK(read_feature_matrix(cols / "features.tfm").dim() == 50);

    CHECK(run("featurize --schema nope --corpus \"" + real_corpus().string() + "\" --out \"" +
              (kWork / "bad").string() + "\"")
              .code != 0);
    CHECK(run("featurize --corpus \"" + (kWork / "does_not_exist").string() + "\" --out \"" +
              (kWork / "bad").string() + "\"")
              .code != 0);
}

TEST_CASE("generate") {
    const auto& features = synthetic_features();
    const auto manifest = read_manifest(kWork / "syn" / "tables" / "manifest.json");
    CHECK(manifest.size() == 200);
    for (const auto& m : manifest) {
        CHECK(m.n_cols == 5);
        CHECK(m.n_rows >= 40);
        CHECK(m.n_rows <= 120);
    }
    CHECK(read_feature_matrix(features).rows() == 200);

    SUBCASE("deterministic in the seed") {
        const auto out = kWork / "syn_again";
        REQUIRE(run("generate --n-tables 200 --cols 5 --rows-min 40 --rows-max 120 --seed 3 --workers 4 --out \"" +
                    out.string() + "\"")
                    .code == 0);
        for (const auto& m : manifest) {
            REQUIRE(slurp(out / "tables" / m.path) == slurp(kWork / "syn" / "tables" / m.path));
        }
    }
    SUBCASE("column counts replay the real multiset") {
        const auto fz = kWork / "fz_replay";
        REQUIRE(run("featurize --corpus \"" + real_corpus().string() + "\" --out \"" + fz.string() + "\"").code == 0);
        const auto out = kWork / "replay";
        REQUIRE(run("generate --n-tables 60 --col-replay \"" + (fz / "features.tfm").string() +
                    "\" --rows 50 --seed 9 --out \"" + out.string() + "\"")
                    .code == 0);
        std::set<std::size_t> seen;
        for (const auto& m : read_manifest(out / "tables" / "manifest.json")) {
            CHECK((m.n_cols == 3 || m.n_cols == 4 || m.n_cols == 6));
            CHECK(m.n_rows == 50);
            seen.insert(m.n_cols);
        }
        CHECK(seen.size() == 3);
    }
    SUBCASE("column source is required") {
        CHECK(run("generate --n-tables 5 --seed 1 --out \"" + (kWork / "g_bad").string() + "\"").code != 0);
    }
    SUBCASE("prior configuration file") {
        const auto cfg = kWork / "tree.cfg";
        std::ofstream(cfg) << "scm_type=tree\np_categorical=0\n";
        const auto out = kWork / "g_cfg";
        REQUIRE(run("generate --config \"" + cfg.string() + "\" --n-tables 5 --cols 4 --seed 2 --out \"" +
                    out.string() + "\"")
                    .code == 0);
        const auto corpus = open_corpus(out / "tables");
        CHECK(corpus.size() == 5);
        std::ofstream(cfg) << "scm_type=forest\n";
        CHECK(run("generate --config \"" + cfg.string() + "\" --n-tables 5 --cols 4 --seed 2 --out \"" +
                  (kWork / "g_cfg2").string() + "\"")
                  .code != 0);
    }
}

TEST_CASE("compare and ablate") {
    const auto& features = synthetic_features();
    const auto schema = json::parse(slurp(fs::path(TABAUDIT_SCHEMA_DIR) / "compare_report.schema.json"));

    const auto self = kWork / "cmp_self";
    const auto r = run("compare --a \"" + features.string() + "\" --b \"" + features.string() +
                       "\" --n-boot 4 --trees 20 --seed 1 --importance --out \"" + self.string() + "\"");
    REQUIRE(r.code == 0);
    const auto report = json::parse(slurp(self / "compare.json"));
    const auto problems = validate(report, schema);
    for (const auto& p : problems) {
        MESSAGE(p);
    }
    CHECK(problems.empty());
    CHECK(report["self_comparison"] == true);
    CHECK(report["recall"].get<double>() == doctest::Approx(0.95).epsilon(0.01));
    CHECK(report["precision"].get<double>() == doctest::Approx(0.95).epsilon(0.01));
    CHECK(report["n_bootstrap"] == 4);
    CHECK(line_count(self / "bootstrap_auc.csv") == 5);
    CHECK(line_count(self / "importance.csv") == 71);

    // Real against synthetic: the larger side is down-sampled to match.
    const auto fz = kWork / "fz_cmp";
    REQUIRE(run("featurize --corpus \"" + real_corpus().string() + "\" --out \"" + fz.string() + "\"").code == 0);
    const auto small = run("compare --a \"" + (fz / "features.tfm").string() + "\" --b \"" + features.string() +
                           "\" --n-boot 2 --trees 10 --seed 1 --out \"" + (kWork / "cmp_small").string() + "\"");
    CHECK(small.code != 0); // 10 rows is below the bootstrap floor
    CHECK(json::parse(slurp(kWork / "cmp_small" / "run.json"))["status"] == "error");

    const auto abl = kWork / "ablate";
    REQUIRE(run("ablate --a \"" + features.string() + "\" --b \"" + features.string() +
                "\" --k-values 1,5 --percentiles 90,95,99 --seed 1 --out \"" + abl.string() + "\"")
                .code == 0);
    CHECK(line_count(abl / "ablation.csv") == 7);

    const auto other = kWork / "cols_feat";
    REQUIRE(run("featurize --schema scalars --corpus \"" + (kWork / "syn" / "tables").string() + "\" --out \"" +
                other.string() + "\"")
                .code == 0);
    CHECK(run("compare --a \"" + features.string() + "\" --b \"" + (other / "features.tfm").string() +
              "\" --seed 1 --out \"" + (kWork / "cmp_mix").string() + "\"")
              .code != 0);
}

TEST_CASE("optimize") {
    const auto real = synthetic_features().string();
    const std::string budget = " --n-eval 20 --n-boot 1 --trees 5 --rows-min 32 --rows-max 64 --seed 4 ";

    SUBCASE("grid") {
        const auto out = kWork / "opt_grid";
        const auto r = run("optimize --mode grid --grid 1 --real \"" + real + "\"" + budget + "--out \"" +
                           out.string() + "\"");
        REQUIRE(r.code == 0);
        CHECK(r.err.find("36 configurations") != std::string::npos);
        CHECK(line_count(out / "trials.csv") == 37);
        CHECK(line_count(out / "ranked.csv") == 37);
        CHECK(fs::exists(out / "histogram.csv"));
        CHECK(fs::exists(out / "best.cfg"));
        const auto limited = run("optimize --mode grid --grid 1 --limit 5 --real \"" + real + "\"" + budget +
                                 "--out \"" + (kWork / "opt_grid_limit").string() + "\"");
        REQUIRE(limited.code == 0);
        CHECK(line_count(kWork / "opt_grid_limit" / "trials.csv") == 6);
    }
    SUBCASE("multi-restart triple search") {
        const auto out = kWork / "opt_triple";
        const auto r = run("optimize --mode tpe-triple --restarts 50 --trials-per-restart 20 --real \"" + real + "\"" +
                           budget + "--out \"" + out.string() + "\"");
        REQUIRE(r.code == 0);
        CHECK(line_count(out / "trials.csv") == 1001);
        CHECK(line_count(out / "pareto.csv") >= 2);
    }
    SUBCASE("resume reproduces the uninterrupted run") {
        const auto full = kWork / "opt_full";
        REQUIRE(run("optimize --mode tpe --trials 30 --real \"" + real + "\"" + budget + "--out \"" + full.string() +
                    "\"")
                    .code == 0);
        CHECK(line_count(full / "convergence.csv") == 31);

        const auto part = kWork / "opt_part";
        fs::create_directories(part);
        std::istringstream journal(slurp(full / "journal.csv"));
        std::ofstream cut(part / "journal.csv", std::ios::binary);
        std::string line;
        for (int i = 0; i < 12 && std::getline(journal, line); ++i) {
            cut << line << '\n';
        }
        cut << "12,0,3,0.1"; // torn final line
        cut.close();
        const auto r = run("optimize --mode tpe --trials 30 --resume --real \"" + real + "\"" + budget + "--out \"" +
                           part.string() + "\"");
        REQUIRE(r.code == 0);
        CHECK(r.err.find("resuming with 11 journaled trials") != std::string::npos);
        CHECK(slurp(part / "trials.csv") == slurp(full / "trials.csv"));
        CHECK(slurp(part / "journal.csv") == slurp(full / "journal.csv"));
    }
    SUBCASE("genetic search and bad modes") {
        const auto out = kWork / "opt_ga";
        REQUIRE(run("optimize --mode ga --population 6 --generations 3 --real \"" + real + "\"" + budget +
                    "--out \"" + out.string() + "\"")
                    .code == 0);
        CHECK(line_count(out / "trials.csv") == 19);
        CHECK(run("optimize --mode annealing --real \"" + real + "\"" + budget + "--out \"" +
                  (kWork / "opt_bad").string() + "\"")
                  .code != 0);
    }
}

TEST_CASE("analyze") {
    const auto fz = kWork / "fz_an";
    REQUIRE(run("featurize --corpus \"" + real_corpus().string() + "\" --out \"" + fz.string() + "\"").code == 0);
    const auto ref = synthetic_features().string();

    auto perf = [&](std::size_t extra) {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0.5, 0.95);
        std::string text = "dataset,ours,other1,other2\n";
        for (int i = 0; i < 10; ++i) {
            text += "t" + std::to_string(i) + "," + std::to_string(u(rng)) + "," + std::to_string(u(rng)) + "," +
                    std::to_string(u(rng)) + "\n";
        }
        for (std::size_t i = 0; i < extra; ++i) {
            text += "unknown" + std::to_string(i) + ",0.5,0.6,0.7\n";
        }
        const auto path = kWork / ("perf_" + std::to_string(extra) + ".csv");
        std::ofstream(path) << text;
        return path.string();
    };
    const std::string pair = " --bench \"" + (fz / "features.tfm").string() + "\" --reference \"" + ref + "\" ";

    const auto out = kWork / "an";
    const auto r = run("analyze --performance \"" + perf(0) + "\" --target ours" + pair + "--covariates \"" +
                       real_corpus().string() + "\" --out \"" + out.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(line_count(out / "cells.csv") == 10);
    CHECK(line_count(out / "scatter.csv") == 11);
    const auto report = json::parse(slurp(out / "report.json"));
    CHECK(report.contains("cells"));

    const auto plain = run("analyze --performance \"" + perf(0) + "\" --target ours" + pair + "--out \"" +
                           (kWork / "an_plain").string() + "\"");
    REQUIRE(plain.code == 0);
    CHECK(line_count(kWork / "an_plain" / "cells.csv") == 4);

    const auto warn = run("analyze --performance \"" + perf(1) + "\" --target ours" + pair + "--out \"" +
                          (kWork / "an_warn").string() + "\"");
    CHECK(warn.code == 0);
    CHECK(warn.err.find("warning") != std::string::npos);

    const auto fail = run("analyze --performance \"" + perf(5) + "\" --target ours" + pair + "--out \"" +
                          (kWork / "an_fail").string() + "\"");
    CHECK(fail.code != 0);
    CHECK(run("analyze --performance \"" + perf(0) + "\" --target nobody" + pair + "--out \"" +
              (kWork / "an_bad").string() + "\"")
              .code != 0);
}
