#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tabaudit/prior_config.hpp"

namespace tabaudit {

using Rng = std::mt19937_64;

enum class Activation { Identity, Tanh, Relu, Sine };
enum class MechanismKind { Root, FeedForward, TreeEnsemble };

struct Mechanism {
    MechanismKind kind = MechanismKind::Root;
    // FeedForward
    Activation activation = Activation::Identity;
    std::vector<double> weights; ///< one per parent
    // TreeEnsemble
    TreeFamily family = TreeFamily::DecisionTree;
    std::size_t depth = 1;
    std::size_t n_estimators = 1;
};

/// Random DAG plus per-node mechanisms. Node `order` is a topological order.
struct ScmGraph {
    std::size_t n_nodes = 0;
    std::vector<std::size_t> order;
    std::vector<std::vector<std::size_t>> parents;
    std::vector<Mechanism> mechanisms;
    std::vector<double> noise_scale;
    std::vector<std::size_t> observed;
    std::size_t target = 0;

    [[nodiscard]] std::size_t edge_count() const;
    [[nodiscard]] bool is_root(std::size_t node) const { return parents[node].empty(); }
};

inline constexpr double kEdgeProbability = 0.3;
inline constexpr std::size_t kMaxTreeDepth = 8;
inline constexpr std::size_t kMaxEstimators = 32;

/// Nodes are shuffled into a random order; each earlier->later pair becomes
/// an edge with probability `p_edge`, and every node after the first that
/// drew no parent gets one uniformly among earlier nodes.
ScmGraph sample_dag(std::size_t n_nodes, Rng& rng, double p_edge = kEdgeProbability);

/// Kahn's algorithm over `parents`; false when a cycle exists.
bool is_acyclic(const std::vector<std::vector<std::size_t>>& parents);

/// Number of Bernoulli(rate) trials up to and including the first success.
std::size_t geometric_trials(double rate, Rng& rng);

/// Mechanism for a node with `fan_in` parents (fan_in >= 1).
Mechanism sample_mechanism(const PriorConfig& theta, std::size_t fan_in, Rng& rng);

/// Values of every node for `n_rows` samples, evaluated in topological order.
/// Roots are standard normal; other nodes apply their mechanism to the
/// parents, standardise, and add N(0, noise_scale^2) noise.
std::vector<std::vector<double>> evaluate_scm(const ScmGraph& graph, std::size_t n_rows, Rng& rng);

} // namespace tabaudit
