#pragma once

// Shared test helpers: independent dense oracles and a generator of random
// well-formed formulas from the supported convolution-chain class, together
// with chain-compatible random parameters.

#include <map>
#include <random>
#include <set>
#include <vector>

#include "lcgnn/dense.hpp"
#include "lcgnn/formula.hpp"
#include "lcgnn/graph.hpp"
#include "lcgnn/oracle.hpp"
#include "lcgnn/synthetic.hpp"

namespace lcgnn::testing {

/// Dense-path normalization oracle, kept independent of normalize_adjacency:
/// builds the dense self-loop augmented adjacency directly from the edge
/// list and scales by inverse square-root degrees.
inline DenseMatrix dense_normalize_oracle(const Graph& g) {
    const Index n = g.num_nodes();
    DenseMatrix a(n, n);
    for (const Edge& e : g.edges()) {
        a.at(e.src, e.dst) = 1.0;
        a.at(e.dst, e.src) = 1.0;
    }
    for (Index i = 0; i < n; ++i) a.at(i, i) = 1.0;
    std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += a.at(i, j);
    DenseMatrix s(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            s.at(i, j) = a.at(i, j) / std::sqrt(deg[static_cast<std::size_t>(i)] *
                                                 deg[static_cast<std::size_t>(j)]);
    return s;
}

struct GeneratedFormula {
    Formula formula = feature_var();
    oracle::ParamSet params;
    Index feature_dim = 1;
};

struct GeneratorOptions {
    int max_chain_layers = 3;
    int max_power = 2;
    int max_branches = 3;
    Index max_dim = 5;
    ActivationKind activation = ActivationKind::relu;
};

/// Random formula from the supported class: filters only ever land on
/// convolution chains (X, weight chains, activations, other filters), never
/// directly on combine or attention nodes. Returns matching random
/// parameters so the formula is evaluable.
inline GeneratedFormula random_formula(std::mt19937_64& rng, const GeneratorOptions& opts = {}) {
    std::uniform_int_distribution<Index> dim_dist(1, opts.max_dim);
    std::uniform_int_distribution<int> layer_dist(1, opts.max_chain_layers);
    std::uniform_int_distribution<int> power_dist(0, opts.max_power);
    std::uniform_int_distribution<int> branch_dist(2, opts.max_branches);
    std::uniform_int_distribution<int> kind_dist(0, 3);
    std::normal_distribution<double> weight_dist(0.0, 1.0);

    GeneratedFormula out;
    out.feature_dim = dim_dist(rng);
    int next_index = 1;

    auto random_weight = [&](Index in, Index cols) {
        DenseMatrix w(in, cols);
        for (double& v : w.values) v = weight_dist(rng) / std::sqrt(static_cast<double>(in));
        return w;
    };

    // One convolution chain: alternating optional filter, weight, optional
    // activation per layer; ends at out_dim.
    auto chain = [&](Index out_dim) {
        const int layers = layer_dist(rng);
        Formula t = feature_var();
        Index dim = out.feature_dim;
        for (int l = 0; l < layers; ++l) {
            const int p = power_dist(rng);
            if (p > 0) t = filter_power(p, std::move(t));
            const Index next_dim = l + 1 == layers ? out_dim : dim_dist(rng);
            out.params.weights.emplace(next_index, random_weight(dim, next_dim));
            t = weight_mul(next_index++, std::move(t));
            dim = next_dim;
            if (l + 1 < layers) t = activation(opts.activation, std::move(t));
        }
        return t;
    };

    const int kind = kind_dist(rng);
    if (kind == 0) {
        out.formula = softmax(chain(dim_dist(rng)));
    } else if (kind == 1) {  // combine over independent chains of equal width
        const int branches = branch_dist(rng);
        const Index width = dim_dist(rng);
        std::vector<Formula> children;
        for (int i = 0; i < branches; ++i) children.push_back(chain(width));
        const CombineKind ck = (rng() & 1) ? CombineKind::concat : CombineKind::max;
        out.formula = softmax(combine(ck, std::move(children)));
    } else if (kind == 2) {  // attention over increasing powers of one chain
        const int terms = branch_dist(rng);
        Formula base = chain(dim_dist(rng));
        std::vector<Formula> children;
        children.push_back(base);
        for (int k = 1; k < terms; ++k) children.push_back(filter_power(k, base));
        for (int k = 0; k < terms; ++k) out.params.attn.push_back(weight_dist(rng));
        out.formula = softmax(attn_sum(std::move(children)));
    } else {  // plain power chain, no softmax wrapper
        out.formula = chain(dim_dist(rng));
    }
    return out;
}

/// Sum over activation nodes of the number of filter nodes above them; the
/// rewrite strictly decreases this.
inline int filters_above_activations(const Formula& f, int filters_above = 0) {
    return std::visit(
        [&](const auto& node) -> int {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return 0;
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                return filters_above_activations(node.child, filters_above + 1);
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                return filters_above + filters_above_activations(node.child, filters_above);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                int total = 0;
                for (const Formula& c : node.children)
                    total += filters_above_activations(c, filters_above);
                return total;
            } else {
                return filters_above_activations(node.child, filters_above);
            }
        },
        f.node().v);
}

inline void weight_index_multiset(const Formula& f, std::multiset<int>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
            } else if constexpr (std::is_same_v<T, WeightMulNode>) {
                out.insert(node.index);
                weight_index_multiset(node.child, out);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                for (const Formula& c : node.children) weight_index_multiset(c, out);
            } else {
                weight_index_multiset(node.child, out);
            }
        },
        f.node().v);
}

inline int activation_count(const Formula& f) {
    return std::visit(
        [&](const auto& node) -> int {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return 0;
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                return 1 + activation_count(node.child);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                int total = 0;
                for (const Formula& c : node.children) total += activation_count(c);
                return total;
            } else {
                return activation_count(node.child);
            }
        },
        f.node().v);
}

/// Total filter power on the path from the root to each feature leaf, in
/// leaf visit order. Invariant under the rewrite.
inline void leaf_powers(const Formula& f, int carried, std::vector<int>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                out.push_back(carried);
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                leaf_powers(node.child, carried + node.power, out);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                for (const Formula& c : node.children) leaf_powers(c, carried, out);
            } else {
                leaf_powers(node.child, carried, out);
            }
        },
        f.node().v);
}

/// Small random graph plus matching random features for oracle checks.
struct GraphFixture {
    Graph graph;
    DenseMatrix s_dense;
    DenseMatrix features;
};

inline GraphFixture random_graph_fixture(std::mt19937_64& rng, Index max_nodes, Index feature_dim) {
    std::uniform_int_distribution<Index> n_dist(2, max_nodes);
    const Index n = n_dist(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (unit(rng) < 0.3) edges.push_back({i, j});
    Graph g = Graph::from_edges(n, std::move(edges));
    DenseMatrix s = dense_normalize_oracle(g);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix x(n, feature_dim);
    for (double& v : x.values) v = gauss(rng);
    return GraphFixture{std::move(g), std::move(s), std::move(x)};
}

}  // namespace lcgnn::testing
