#include "tabaudit/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabaudit/error.hpp"

namespace tabaudit {

namespace {

double apply(Activation a, double x) {
    switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Sine: return std::sin(x);
    }
    return x;
}

void standardize(std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / n);
    for (double& x : v) {
        x = sd > 1e-12 ? (x - mean) / sd : 0.0;
    }
}

/// Grows one random tree over `rows` and writes its leaf value into `out`
/// for every row, scaled by `weight` and accumulated.
class RandomTreeGrower {
public:
    RandomTreeGrower(const std::vector<const std::vector<double>*>& inputs, TreeFamily family, Rng& rng)
        : inputs_(inputs), family_(family), rng_(rng) {}

    void grow(std::vector<std::size_t> rows, const std::vector<std::size_t>& features, std::size_t depth,
              double weight, std::vector<double>& out) {
        std::normal_distribution<double> leaf(0.0, 1.0);
        if (depth == 0 || rows.size() < 2) {
            const double v = leaf(rng_) * weight;
            for (auto r : rows) {
                out[r] += v;
            }
            return;
        }
        std::uniform_int_distribution<std::size_t> pick_feature(0, features.size() - 1);
        const auto& col = *inputs_[features[pick_feature(rng_)]];
        double threshold = 0.0;
        if (family_ == TreeFamily::ExtraTrees) {
            double lo = col[rows.front()];
            double hi = lo;
            for (auto r : rows) {
                lo = std::min(lo, col[r]);
                hi = std::max(hi, col[r]);
            }
            threshold = std::uniform_real_distribution<double>(lo, hi)(rng_);
        } else {
            std::uniform_int_distribution<std::size_t> pick_row(0, rows.size() - 1);
            threshold = col[rows[pick_row(rng_)]];
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : rows) {
            (col[r] <= threshold ? left : right).push_back(r);
        }
        grow(std::move(left), features, depth - 1, weight, out);
        grow(std::move(right), features, depth - 1, weight, out);
    }

private:
    const std::vector<const std::vector<double>*>& inputs_;
    TreeFamily family_;
    Rng& rng_;
};

std::vector<double> evaluate_tree_ensemble(const Mechanism& m, const std::vector<const std::vector<double>*>& inputs,
                                           std::size_t n_rows, Rng& rng) {
    std::vector<double> out(n_rows, 0.0);
    std::vector<std::size_t> all_rows(n_rows);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::vector<std::size_t> all_features(inputs.size());
    std::iota(all_features.begin(), all_features.end(), 0);

    double weight = 1.0;
    switch (m.family) {
    case TreeFamily::DecisionTree: weight = 1.0; break;
    case TreeFamily::ExtraTrees:
    case TreeFamily::RandomForest: weight = 1.0 / static_cast<double>(m.n_estimators); break;
    case TreeFamily::GradientBoosted: weight = 0.1; break;
    }
    RandomTreeGrower grower(inputs, m.family, rng);
    for (std::size_t t = 0; t < m.n_estimators; ++t) {
        if (m.family == TreeFamily::RandomForest && inputs.size() > 1) {
            auto subset = all_features;
            std::shuffle(subset.begin(), subset.end(), rng);
            const auto keep = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(inputs.size()))));
            subset.resize(keep);
            std::sort(subset.begin(), subset.end());
            grower.grow(all_rows, subset, m.depth, weight, out);
        } else {
            grower.grow(all_rows, all_features, m.depth, weight, out);
        }
    }
    return out;
}

} // namespace

std::size_t ScmGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& p : parents) {
        n += p.size();
    }
    return n;
}

ScmGraph sample_dag(std::size_t n_nodes, Rng& rng, double p_edge) {
    if (n_nodes < 2) {
        throw DomainError("sample_dag: need at least 2 nodes");
    }
    ScmGraph g;
    g.n_nodes = n_nodes;
    g.order.resize(n_nodes);
    std::iota(g.order.begin(), g.order.end(), 0);
    std::shuffle(g.order.begin(), g.order.end(), rng);
    g.parents.assign(n_nodes, {});
    std::bernoulli_distribution edge(p_edge);
    for (std::size_t j = 1; j < n_nodes; ++j) {
        auto& ps = g.parents[g.order[j]];
        for (std::size_t i = 0; i < j; ++i) {
            if (edge(rng)) {
                ps.push_back(g.order[i]);
            }
        }
        if (ps.empty()) {
            ps.push_back(g.order[std::uniform_int_distribution<std::size_t>(0, j - 1)(rng)]);
        }
    }
    g.mechanisms.assign(n_nodes, Mechanism{});
    g.noise_scale.assign(n_nodes, 1.0);
    return g;
}

bool is_acyclic(const std::vector<std::vector<std::size_t>>& parents) {
    const std::size_t n = parents.size();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (auto p : parents[v]) {
            if (p >= n) {
                return false;
            }
            children[p].push_back(v);
            ++indegree[v];
        }
    }
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (indegree[v] == 0) {
            ready.push_back(v);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto v = ready.back();
        ready.pop_back();
        ++visited;
        for (auto c : children[v]) {
            if (--indegree[c] == 0) {
                ready.push_back(c);
            }
        }
    }
    return visited == n;
}

std::size_t geometric_trials(double rate, Rng& rng) {
    if (!(rate > 0.0 && rate <= 1.0)) {
        throw DomainError("geometric_trials: rate must lie in (0, 1]");
    }
    if (rate == 1.0) {
        return 1;
    }
    return static_cast<std::size_t>(std::geometric_distribution<long long>(rate)(rng)) + 1;
}

Mechanism sample_mechanism(const PriorConfig& theta, std::size_t fan_in, Rng& rng) {
    if (fan_in == 0) {
        throw DomainError("sample_mechanism: node has no parents");
    }
    bool feed_forward = theta.scm_type == ScmType::Mlp;
    if (theta.scm_type == ScmType::Mix) {
        feed_forward = std::bernoulli_distribution(theta.p_mlp)(rng);
    }
    Mechanism m;
    if (feed_forward) {
        m.kind = MechanismKind::FeedForward;
        m.activation = static_cast<Activation>(std::uniform_int_distribution<int>(0, 3)(rng));
        std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        m.weights.resize(fan_in);
        for (auto& x : m.weights) {
            x = w(rng);
        }
        return m;
    }
    m.kind = MechanismKind::TreeEnsemble;
    m.family = theta.tree_family;
    m.depth = std::min(kMaxTreeDepth, 1 + geometric_trials(theta.depth_rate, rng));
    const std::size_t estimators = std::min(kMaxEstimators, 1 + geometric_trials(theta.estimators_rate, rng));
    m.n_estimators = m.family == TreeFamily::DecisionTree ? 1 : estimators;
    return m;
}

std::vector<std::vector<double>> evaluate_scm(const ScmGraph& graph, std::size_t n_rows, Rng& rng) {
    std::vector<std::vector<double>> values(graph.n_nodes);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto node : graph.order) {
        auto& out = values[node];
        const auto& ps = graph.parents[node];
        const auto& mech = graph.mechanisms[node];
        if (ps.empty() || mech.kind == MechanismKind::Root) {
            out.resize(n_rows);
            for (auto& x : out) {
                x = normal(rng);
            }
            continue;
        }
        std::vector<const std::vector<double>*> inputs;
        inputs.reserve(ps.size());
        for (auto p : ps) {
            if (values[p].size() != n_rows) {
                throw DomainError("evaluate_scm: order is not topological");
            }
            inputs.push_back(&values[p]);
        }
        if (mech.kind == MechanismKind::FeedForward) {
            out.assign(n_rows, 0.0);
            for (std::size_t i = 0; i < n_rows; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < inputs.size(); ++k) {
                    s += mech.weights[k] * (*inputs[k])[i];
                }
                out[i] = apply(mech.activation, s);
            }
        } else {
            out = evaluate_tree_ensemble(mech, inputs, n_rows, rng);
        }
        standardize(out);
        const double scale = graph.noise_scale[node];
        for (auto& x : out) {
            x += scale * normal(rng);
        }
    }
    return values;
}

} // namespace tabaudit
