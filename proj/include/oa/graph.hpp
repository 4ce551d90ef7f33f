#pragma once

#include <utility>
#include <vector>

#include "oa/linalg.hpp"

namespace oa {

/// Undirected connected graph with a fixed, arbitrary edge orientation.
/// Edge order defines the column order of the incidence matrix.
class NetworkGraph {
  public:
    NetworkGraph(int node_count, std::vector<std::pair<int, int>> edges);

    int node_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    /// n x m {0, +-1} incidence matrix; column k has +1 at the tail and -1
    /// at the head of edge k. Column sums are exactly zero.
    Matrix incidence() const;

    /// Dimension of the cycle space, m - n + 1. Zero iff the graph is a tree.
    int cycle_space_dim() const;

    /// Communication Laplacian of the edge-adjacency graph: two edges of the
    /// original graph are neighbors iff they share a node. m x m, PSD,
    /// zero row sums.
    Matrix comm_laplacian() const;

  private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
};

struct SpanningTree {
    std::vector<int> edge_indices;  // n-1 edges, in BFS discovery order
    Matrix incidence;               // n x (n-1) submatrix of B
};

/// BFS spanning tree from node 0, edges scanned in listed order.
SpanningTree extract_spanning_tree(const NetworkGraph& graph);

/// Weighted Laplacian L_Q = B Q^-1 B^T for diagonal positive weights q.
Matrix weighted_laplacian(const Matrix& b, const Vector& q);

}  // namespace oa
