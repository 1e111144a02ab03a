#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <queue>

#include "tabaudit/error.hpp"
#include "tabaudit/generator.hpp"
#include "tabaudit/prior_config.hpp"
#include "tabaudit/scm.hpp"

using namespace tabaudit;

namespace {

/// Nodes reachable from any root by following child edges.
std::size_t reachable_from_roots(const ScmGraph& g) {
    std::vector<std::vector<std::size_t>> children(g.n_nodes);
    for (std::size_t v = 0; v < g.n_nodes; ++v) {
        for (auto p : g.parents[v]) {
            children[p].push_back(v);
        }
    }
    std::vector<bool> seen(g.n_nodes, false);
    std::queue<std::size_t> q;
    for (std::size_t v = 0; v < g.n_nodes; ++v) {
        if (g.is_root(v)) {
            seen[v] = true;
            q.push(v);
        }
    }
    std::size_t count = 0;
    while (!q.empty()) {
        const auto v = q.front();
        q.pop();
        ++count;
        for (auto c : children[v]) {
            if (!seen[c]) {
                seen[c] = true;
                q.push(c);
            }
        }
    }
    return count;
}

/// E[min(cap, 1 + G)] with G geometric on {1, 2, ...} with success rate r.
double capped_depth_mean(double r, std::size_t cap) {
    double mean = 0.0;
    double tail = 1.0;
    for (std::size_t g = 1; 1 + g < cap; ++g) {
        const double p = std::pow(1.0 - r, static_cast<double>(g - 1)) * r;
        mean += static_cast<double>(1 + g) * p;
        tail -= p;
    }
    return mean + static_cast<double>(cap) * tail;
}

std::size_t feature_columns(const Table& t, ColumnKind kind) {
    std::size_t n = 0;
    for (std::size_t j = 0; j + 1 < t.n_cols(); ++j) {
        n += t.column(j).kind() == kind;
    }
    return n;
}

} // namespace

TEST_CASE("random DAGs") {
    SUBCASE("two nodes always share one edge") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            Rng rng(s);
            CHECK(sample_dag(2, rng).edge_count() == 1);
        }
    }
    SUBCASE("acyclic and connected to a root") {
        for (std::uint64_t s = 0; s < 200; ++s) {
            Rng rng(s);
            const auto g = sample_dag(2 + s % 40, rng);
            CHECK(is_acyclic(g.parents));
            CHECK(reachable_from_roots(g) == g.n_nodes);
            std::vector<std::size_t> pos(g.n_nodes);
            for (std::size_t i = 0; i < g.order.size(); ++i) {
                pos[g.order[i]] = i;
            }
            for (std::size_t v = 0; v < g.n_nodes; ++v) {
                for (auto p : g.parents[v]) {
                    REQUIRE(pos[p] < pos[v]);
                }
            }
        }
    }
    SUBCASE("same seed gives the same graph") {
        Rng a(9), b(9);
        const auto ga = sample_dag(25, a);
        const auto gb = sample_dag(25, b);
        CHECK(ga.order == gb.order);
        CHECK(ga.parents == gb.parents);
    }
    SUBCASE("cycle detection") {
        CHECK_FALSE(is_acyclic({{1}, {0}}));
        CHECK(is_acyclic({{}, {0}, {0, 1}}));
    }
}

TEST_CASE("mechanism sampling") {
    PriorConfig theta;
    SUBCASE("mix with certain feed-forward choice") {
        theta.scm_type = ScmType::Mix;
        theta.p_mlp = 1.0;
        Rng rng(1);
        for (int i = 0; i < 200; ++i) {
            const auto m = sample_mechanism(theta, 3, rng);
            CHECK(m.kind == MechanismKind::FeedForward);
            CHECK(m.weights.size() == 3);
        }
    }
    SUBCASE("a single decision tree per node") {
        theta.scm_type = ScmType::Tree;
        theta.tree_family = TreeFamily::DecisionTree;
        Rng rng(2);
        for (int i = 0; i < 200; ++i) {
            const auto m = sample_mechanism(theta, 2, rng);
            CHECK(m.kind == MechanismKind::TreeEnsemble);
            CHECK(m.n_estimators == 1);
            CHECK(m.depth >= 2);
            CHECK(m.depth <= kMaxTreeDepth);
        }
    }
    SUBCASE("mean depth matches the capped geometric law") {
        theta.scm_type = ScmType::Tree;
        theta.tree_family = TreeFamily::RandomForest;
        for (double rate : {0.3, 0.65, 1.0}) {
            theta.depth_rate = rate;
            Rng rng(3);
            double total = 0.0;
            const int n = 40000;
            for (int i = 0; i < n; ++i) {
                total += static_cast<double>(sample_mechanism(theta, 1, rng).depth);
            }
            CHECK(total / n == doctest::Approx(capped_depth_mean(rate, kMaxTreeDepth)).epsilon(0.01));
        }
    }
    SUBCASE("no parents is an error") {
        Rng rng(4);
        CHECK_THROWS_AS(sample_mechanism(theta, 0, rng), DomainError);
    }
}

TEST_CASE("generated tables") {
    GenerationRequest req;
    req.n_rows = 200;
    req.n_cols = 9;

    SUBCASE("shape, names and target classes") {
        for (auto type : {ScmType::Mlp, ScmType::Tree, ScmType::Mix}) {
            req.theta.scm_type = type;
            for (std::uint64_t s = 0; s < 15; ++s) {
                req.seed = s;
                const auto t = generate_table(req);
                CHECK(t.n_rows() == 200);
                CHECK(t.n_cols() == 9);
                CHECK(t.column(8).name() == "target");
                for (std::size_t j = 0; j < t.n_cols(); ++j) {
                    CHECK(t.column(j).missing_count() == 0);
                }
                const auto counts = t.column(8).value_counts();
                CHECK(counts.size() >= 1);
                CHECK(counts.size() <= static_cast<std::size_t>(req.theta.max_classes));
            }
        }
    }
    SUBCASE("deterministic in the seed") {
        req.seed = 77;
        CHECK(format_table(generate_table(req)) == format_table(generate_table(req)));
        auto other = req;
        other.seed = 78;
        CHECK(format_table(generate_table(req)) != format_table(generate_table(other)));
    }
    SUBCASE("no categorical features when the share is zero") {
        req.theta.p_categorical = 0.0;
        for (std::uint64_t s = 0; s < 30; ++s) {
            req.seed = s;
            CHECK(feature_columns(generate_table(req), ColumnKind::Categorical) == 0);
        }
    }
    SUBCASE("categorical share follows the configured probability") {
        req.theta.p_categorical = 0.5;
        req.n_rows = 64;
        req.n_cols = 6;
        std::size_t cat = 0;
        std::size_t total = 0;
        for (std::uint64_t s = 0; s < 1000; ++s) {
            req.seed = s;
            const auto t = generate_table(req);
            cat += feature_columns(t, ColumnKind::Categorical);
            total += t.n_cols() - 1;
        }
        CHECK(static_cast<double>(cat) / static_cast<double>(total) == doctest::Approx(0.5).epsilon(0.06));
    }
    SUBCASE("invalid requests") {
        req.n_cols = 1;
        CHECK_THROWS_AS(generate_table(req), DomainError);
        req.n_cols = 5;
        req.n_rows = 1;
        CHECK_THROWS_AS(generate_table(req), DomainError);
    }
}

TEST_CASE("target discretisation") {
    std::vector<double> v(101);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = std::sin(static_cast<double>(i) * 1.7);
    }
    Rng rng(0);
    for (bool ordered : {true, false}) {
        const auto cls = discretize_target(v, {}, 2, ordered, true, rng);
        std::map<int, std::size_t> counts;
        for (int c : cls) {
            ++counts[c];
        }
        REQUIRE(counts.size() == 2);
        CHECK(std::min(counts[0], counts[1]) == 50);
        CHECK(std::max(counts[0], counts[1]) == 51);
    }
    const auto ordered = discretize_target(v, {}, 4, true, false, rng);
    for (std::size_t a = 0; a < v.size(); ++a) {
        for (std::size_t b = 0; b < v.size(); ++b) {
            if (v[a] < v[b]) {
                REQUIRE(ordered[a] <= ordered[b]);
            }
        }
    }
    CHECK_THROWS_AS(discretize_target(v, {}, 1, true, false, rng), DomainError);

    const auto codes = quantile_codes({5.0, 1.0, 3.0, 2.0}, 2);
    CHECK(codes == std::vector<double>{1.0, 0.0, 1.0, 0.0});
}

TEST_CASE("count samplers") {
    Rng rng(5);
    const auto seven = ColumnCountSampler::constant(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(seven(rng) == 7);
    }
    const ColumnCountSampler mixed({2, 2, 2, 10});
    CHECK(mixed.min() == 2);
    CHECK(mixed.max() == 10);
    std::size_t twos = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto c = mixed(rng);
        CHECK((c == 2 || c == 10));
        twos += c == 2;
    }
    CHECK(static_cast<double>(twos) / n == doctest::Approx(0.75).epsilon(0.02));
    CHECK_THROWS_AS(ColumnCountSampler({}), DomainError);

    const RowCountSampler rows(64, 1024);
    for (int i = 0; i < 2000; ++i) {
        const auto r = rows(rng);
        CHECK(r >= 64);
        CHECK(r <= 1024);
    }
    CHECK_THROWS_AS(RowCountSampler(1, 5), DomainError);
}

TEST_CASE("synthetic corpora") {
    PriorConfig theta;
    const auto cols = ColumnCountSampler({3, 5, 8});
    const RowCountSampler rows(32, 300);

    SUBCASE("size, names and no replay when disabled") {
        CorpusGenerationStats stats;
        const auto c = generate_corpus(theta, 200, cols, rows, 11, 1, {}, &stats);
        CHECK(c.size() == 200);
        CHECK(c.manifest()[0].source_id == "syn_00000");
        CHECK(c.manifest()[199].source_id == "syn_00199");
        CHECK(stats.replayed == 0);
        CHECK(stats.fresh == 200);
    }
    SUBCASE("replay reuses small tables") {
        theta.replay_small = true;
        CorpusGenerationStats stats;
        const auto c = generate_corpus(theta, 100, cols, rows, 12, 1, {}, &stats);
        CHECK(stats.replayed > 0);
        CHECK(stats.replayed + stats.fresh == 100);
    }
    SUBCASE("independent of workers") {
        const auto a = generate_corpus(theta, 40, cols, rows, 13, 1);
        const auto b = generate_corpus(theta, 40, cols, rows, 13, 4);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(format_table(*a.table(i)) == format_table(*b.table(i)));
        }
    }
}

TEST_CASE("prior config text form") {
    PriorConfig c;
    c.scm_type = ScmType::Mix;
    c.tree_family = TreeFamily::ExtraTrees;
    c.depth_rate = 0.4;
    c.p_mlp = 0.25;
    c.balanced = true;
    CHECK(PriorConfig::from_text(c.to_text()) == c);

    PriorConfig mlp;
    mlp.depth_rate = 0.9;
    CHECK(mlp.to_text().find("depth_rate") == std::string::npos);
    CHECK(mlp == PriorConfig{});

    const auto path = (std::filesystem::temp_directory_path() / "tabaudit_prior.cfg").string();
    save_prior_config(c, path);
    CHECK(load_prior_config(path) == c);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(PriorConfig::from_text("max_classes=1\n"), DomainError);
    CHECK_THROWS_AS(PriorConfig::from_text("p_categorical=0.9\n"), DomainError);
    CHECK_THROWS_AS(PriorConfig::from_text("nonsense=1\n"), InputError);
    CHECK_THROWS_AS(PriorConfig::from_text("scm_type=forest\n"), InputError);
    CHECK_THROWS_AS(PriorConfig::from_text("max_classes=3\nmax_classes=4\n"), InputError);
    CHECK_THROWS_AS(PriorConfig::from_text("balanced=2\n"), InputError);
}
