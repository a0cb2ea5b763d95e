#include "lcgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcgnn/errors.hpp"

namespace lcgnn {

Graph Graph::from_edges(Index num_nodes, std::vector<Edge> edges) {
    if (num_nodes <= 0) throw ConfigError("num_nodes: must be positive");
    std::vector<Edge> canonical;
    canonical.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes)
            throw ConfigError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                              "): node id out of range [0, " + std::to_string(num_nodes) + ")");
        if (e.src == e.dst) continue;  // self-loops are reintroduced by augmentation
        canonical.push_back(e.src < e.dst ? e : Edge{e.dst, e.src});
    }
    std::sort(canonical.begin(), canonical.end());
    canonical.erase(std::unique(canonical.begin(), canonical.end()), canonical.end());
    return Graph(num_nodes, std::move(canonical));
}

SparseMatrix add_self_loops(const Graph& g) {
    const Index n = g.num_nodes();
    SparseMatrix out;
    out.rows = n;
    out.cols = n;
    out.triplets.reserve(g.edges().size() * 2 + static_cast<std::size_t>(n));
    for (const Edge& e : g.edges()) {
        out.triplets.push_back({e.src, e.dst, 1.0});
        out.triplets.push_back({e.dst, e.src, 1.0});
    }
    for (Index i = 0; i < n; ++i) out.triplets.push_back({i, i, 1.0});
    std::sort(out.triplets.begin(), out.triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    return out;
}

DegreeVector degree_vector(const SparseMatrix& a_tilde) {
    DegreeVector d(static_cast<std::size_t>(a_tilde.rows), 0.0);
    for (const Triplet& t : a_tilde.triplets) d[static_cast<std::size_t>(t.row)] += t.value;
    return d;
}

SparseMatrix normalize_adjacency(const SparseMatrix& a_tilde, const DegreeVector& d) {
    if (static_cast<Index>(d.size()) != a_tilde.rows)
        throw ShapeMismatch("normalize_adjacency: degree length does not match matrix");
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!(d[i] > 0.0))
            throw ConfigError("degree[" + std::to_string(i) +
                              "]: zero degree; normalize requires self-loop augmented input");
    SparseMatrix out;
    out.rows = a_tilde.rows;
    out.cols = a_tilde.cols;
    out.triplets.reserve(a_tilde.triplets.size());
    for (const Triplet& t : a_tilde.triplets) {
        double v = t.value / std::sqrt(d[static_cast<std::size_t>(t.row)] *
                                       d[static_cast<std::size_t>(t.col)]);
        out.triplets.push_back({t.row, t.col, v});
    }
    return out;
}

DenseMatrix to_dense(const SparseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    for (const Triplet& t : m.triplets) out.at(t.row, t.col) += t.value;
    return out;
}

}  // namespace lcgnn
