#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "oa/linalg.hpp"

namespace oa {

/// x' = A x + G u + P w, y = C x.
struct LinearNode {
    Matrix a, g, p, c;

    int state_dim() const { return static_cast<int>(a.rows()); }
    int output_dim() const { return static_cast<int>(c.rows()); }
};

/// x' = f0(x) + G u + P w, y = C x with f0 the gradient of a concave map,
/// G = C^T full column rank and R(P) contained in R(G).
struct GradientFlowNode {
    std::function<Vector(const Vector&)> gradient;
    Matrix g, p;
    int dim = 0;

    int state_dim() const { return dim; }
    int output_dim() const { return static_cast<int>(g.cols()); }
};

/// Scalar storage node x' = u + P w, y = x.
struct InventoryNode {
    Matrix p;  // 1 x q_i supply map

    int state_dim() const { return 1; }
    int output_dim() const { return 1; }
};

/// Droop node D x' = P* + u, y = x'.
struct DroopNode {
    double d = 1.0;
    double p_star = 0.0;

    int state_dim() const { return 1; }
    int output_dim() const { return 1; }
};

using NodeModel = std::variant<LinearNode, GradientFlowNode, InventoryNode, DroopNode>;

int node_state_dim(const NodeModel& model);
int node_output_dim(const NodeModel& model);

Vector node_vector_field(const NodeModel& model, const Vector& x, const Vector& u, const Vector& w);

/// Output map; DroopNode reports its frequency and therefore needs the
/// current xdot.
Vector node_output(const NodeModel& model, const Vector& x, const Vector& w,
                   const Vector* xdot = nullptr);

/// Symmetric Q > 0 with Q G = C^T and A^T Q + Q A <= 0, found by solving the
/// linear constraint and eigenvalue-checking the result. Empty when the
/// min-norm solution fails the checks.
std::optional<Matrix> passivity_certificate(const LinearNode& node, double tol = 1e-9);

/// One trajectory sampled on a uniform grid; columns are time steps.
struct NodeTrajectory {
    Matrix x, u, y;
};

struct SupplyReport {
    int violations = 0;
    double max_violation = 0.0;       // worst Vdot - supply excess over tolerance
    double max_droop_identity_error = 0.0;
    int steps = 0;
};

/// Finite-difference check of the incremental dissipation inequality
/// Vdot <= (y - y')^T (u - u') along a pair of trajectories on the same
/// grid. Storage: 1/2 |dx|_Q^2 for LinearNode (certificate required),
/// 1/2 |dx|^2 for gradient-flow and inventory nodes. DroopNode is checked
/// against the exact supply identity (dy)(du) = D |dy|^2 instead.
SupplyReport incremental_supply_check(const NodeModel& model, const NodeTrajectory& ta,
                                      const NodeTrajectory& tb, double dt,
                                      double tol_base = 1e-6);

}  // namespace oa
