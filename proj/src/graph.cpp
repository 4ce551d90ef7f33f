#include "oa/graph.hpp"

#include <queue>
#include <stdexcept>

namespace oa {

NetworkGraph::NetworkGraph(int node_count, std::vector<std::pair<int, int>> edges)
    : n_(node_count), edges_(std::move(edges)) {
    if (n_ < 1) throw std::invalid_argument("NetworkGraph: need at least one node");
    for (const auto& [a, b] : edges_) {
        if (a < 0 || a >= n_ || b < 0 || b >= n_)
            throw std::invalid_argument("NetworkGraph: edge endpoint out of range");
        if (a == b) throw std::invalid_argument("NetworkGraph: self-loop");
    }
    // connectivity check
    std::vector<char> seen(n_, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int visited = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (const auto& [a, b] : edges_) {
            int other = -1;
            if (a == u) other = b;
            else if (b == u) other = a;
            if (other >= 0 && !seen[other]) {
                seen[other] = 1;
                ++visited;
                frontier.push(other);
            }
        }
    }
    if (visited != n_) throw std::invalid_argument("NetworkGraph: graph is not connected");
}

Matrix NetworkGraph::incidence() const {
    Matrix b = Matrix::Zero(n_, edge_count());
    for (int k = 0; k < edge_count(); ++k) {
        b(edges_[k].first, k) = 1.0;
        b(edges_[k].second, k) = -1.0;
    }
    return b;
}

int NetworkGraph::cycle_space_dim() const { return edge_count() - n_ + 1; }

Matrix NetworkGraph::comm_laplacian() const {
    const int m = edge_count();
    Matrix l = Matrix::Zero(m, m);
    for (int k = 0; k < m; ++k) {
        for (int j = k + 1; j < m; ++j) {
            const auto& ek = edges_[k];
            const auto& ej = edges_[j];
            const bool adjacent = ek.first == ej.first || ek.first == ej.second ||
                                  ek.second == ej.first || ek.second == ej.second;
            if (adjacent) {
                l(k, j) = -1.0;
                l(j, k) = -1.0;
                l(k, k) += 1.0;
                l(j, j) += 1.0;
            }
        }
    }
    return l;
}

SpanningTree extract_spanning_tree(const NetworkGraph& graph) {
    const int n = graph.node_count();
    std::vector<char> seen(n, 0);
    seen[0] = 1;
    std::queue<int> frontier;
    frontier.push(0);
    std::vector<int> tree_edges;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (int k = 0; k < graph.edge_count(); ++k) {
            const auto& [a, b] = graph.edges()[k];
            int other = -1;
            if (a == u) other = b;
            else if (b == u) other = a;
            if (other >= 0 && !seen[other]) {
                seen[other] = 1;
                tree_edges.push_back(k);
                frontier.push(other);
            }
        }
    }
    SpanningTree tree;
    tree.edge_indices = std::move(tree_edges);
    const Matrix b = graph.incidence();
    tree.incidence = Matrix::Zero(n, n - 1);
    for (size_t i = 0; i < tree.edge_indices.size(); ++i)
        tree.incidence.col(static_cast<Eigen::Index>(i)) = b.col(tree.edge_indices[i]);
    return tree;
}

Matrix weighted_laplacian(const Matrix& b, const Vector& q) {
    if (q.size() != b.cols()) throw std::invalid_argument("weighted_laplacian: weight count mismatch");
    if ((q.array() <= 0.0).any()) throw std::invalid_argument("weighted_laplacian: weights must be positive");
    return b * q.cwiseInverse().asDiagonal() * b.transpose();
}

}  // namespace oa
