#pragma once

#include <functional>
#include <variant>

#include "oa/exosystem.hpp"
#include "oa/graph.hpp"

namespace oa {

/// Per-edge internal-model controller with linear embedding: each edge
/// carries a copy of the exosystem dynamics,
///   eta_k' = s(eta_k) + H_k^T v_k,   lambda_k = H_k eta_k (+ nu_k),
/// with H_k the k-th row of the feedforward matrix.
struct InternalModelController {
    Exosystem exo;
    Matrix h;  // m x d, row k is the output map of edge k
    bool feedthrough = true;

    int edge_count() const { return static_cast<int>(h.rows()); }
    int copy_dim() const { return static_cast<int>(h.cols()); }
    int state_dim() const { return edge_count() * copy_dim(); }
};

/// Internal-model controller with an added diffusive consensus term over the
/// controller communication graph:
///   eta' = s_bar(eta) - (L_comm (x) I_d) eta + H_bar v.
struct CommAugmentedController {
    InternalModelController core;
    Matrix l_comm;  // m x m communication Laplacian
    double comm_gain = 1.0;

    int state_dim() const { return core.state_dim(); }
};

/// Stateless coupling lambda = nu = v, i.e. u = -(L (x) I_p) y.
struct StaticCoupling {
    int edge_count_ = 0;
    int p = 1;

    int state_dim() const { return 0; }
};

/// eta_k' = v_k, lambda_k = psi(eta_k) + nu_k with psi strongly monotone.
struct MonotoneIntegratorController {
    std::function<double(double)> psi;
    std::function<double(double)> potential;  // Psi with Psi' = psi
    double c = 1.0;
    int edge_count_ = 0;
    bool feedthrough = true;

    static MonotoneIntegratorController default_map(int edge_count);

    int state_dim() const { return edge_count_; }
};

/// Single shared multiplier state of the optimal routing design:
///   eta' = s(eta) + H^T v,   lambda = H eta (+ nu).
struct OptimalDistributionController {
    Exosystem exo;
    Matrix h;  // m x q from the optimal feedforward design
    bool feedthrough = true;

    int state_dim() const { return static_cast<int>(h.cols()); }
};

/// lambda = A sin(eta) with eta = B^T theta derived from the node states.
struct DroopEdgeController {
    Vector a;  // positive line coefficients

    int state_dim() const { return static_cast<int>(a.size()); }
};

using EdgeController =
    std::variant<InternalModelController, CommAugmentedController, StaticCoupling,
                 MonotoneIntegratorController, OptimalDistributionController,
                 DroopEdgeController>;

int controller_state_dim(const EdgeController& ctrl);
bool controller_has_feedthrough(const EdgeController& ctrl);

Vector controller_vector_field(const EdgeController& ctrl, const Vector& eta, const Vector& v);

/// Controller output lambda. nu must be empty unless the family carries a
/// feedthrough term.
Vector controller_output(const EdgeController& ctrl, const Vector& eta, const Vector& nu);

/// Spanning-tree feedforward of the balancing design: tree rows carry
/// -(B_T^T B_T)^-1 B_T^T P, chord rows are zero. Satisfies B H = -Delta_n P.
Matrix design_tree_feedforward(const NetworkGraph& graph, const Matrix& p);

/// Optimal routing feedforward H = -Q^-1 B^T L_Q^dagger P.
Matrix design_optimal_feedforward(const NetworkGraph& graph, const Vector& q, const Matrix& p);

}  // namespace oa
