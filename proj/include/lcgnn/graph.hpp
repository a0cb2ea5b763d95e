#pragma once

#include <span>
#include <vector>

#include "lcgnn/dense.hpp"

namespace lcgnn {

struct Edge {
    Index src = 0;
    Index dst = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected simple graph. The stored edge list is canonical: src <= dst,
/// sorted lexicographically, deduplicated, no self-loops. Immutable after
/// construction and safe to share across threads.
class Graph {
public:
    /// Canonicalizes a raw edge list: orients each pair as (min, max), drops
    /// self-loops, sorts and deduplicates. Throws ConfigError on out-of-range
    /// node ids or non-positive node count.
    static Graph from_edges(Index num_nodes, std::vector<Edge> edges);

    Index num_nodes() const { return num_nodes_; }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }

private:
    Graph(Index n, std::vector<Edge> canonical) : num_nodes_(n), edges_(std::move(canonical)) {}

    Index num_nodes_ = 0;
    std::vector<Edge> edges_;
};

struct Triplet {
    Index row = 0;
    Index col = 0;
    double value = 0.0;
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Coordinate-format sparse matrix. Triplets are kept sorted by (row, col)
/// with no duplicates.
struct SparseMatrix {
    Index rows = 0;
    Index cols = 0;
    std::vector<Triplet> triplets;

    Index nnz() const { return static_cast<Index>(triplets.size()); }
};

using DegreeVector = std::vector<double>;

/// Self-loop augmented 0/1 adjacency matrix: one triplet per directed arc of
/// every undirected edge plus exactly one diagonal entry per node.
SparseMatrix add_self_loops(const Graph& g);

/// Row sums of a symmetric 0/1 sparse matrix.
DegreeVector degree_vector(const SparseMatrix& a_tilde);

/// Symmetric degree normalization: out[i][j] = a[i][j] / sqrt(d[i] * d[j]).
/// Rejects non-positive degrees, which can only happen when self-loop
/// augmentation was bypassed.
SparseMatrix normalize_adjacency(const SparseMatrix& a_tilde, const DegreeVector& d);

DenseMatrix to_dense(const SparseMatrix& m);

}  // namespace lcgnn
