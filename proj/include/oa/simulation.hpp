#pragma once

#include <string>
#include <vector>

#include "oa/edge_controllers.hpp"
#include "oa/exosystem.hpp"
#include "oa/graph.hpp"
#include "oa/node_models.hpp"

namespace oa {

/// Time-indexed record of one closed-loop run. Columns are steps on a
/// uniform grid.
struct Trace {
    std::vector<double> t;
    Matrix w, x, eta, y, u, lambda;
    double dt = 0.0;
    std::string scenario_id;
    unsigned seed = 0;
};

/// Closed loop with nodes on the vertices and one controller on the edges,
/// interconnected through z = (B^T (x) I_p) y, v = -z,
/// u = (B (x) I_p) lambda.
class ClosedLoopSystem {
  public:
    ClosedLoopSystem(NetworkGraph graph, std::vector<NodeModel> nodes, EdgeController controller,
                     Exosystem exo, int p);

    const NetworkGraph& graph() const { return graph_; }
    const std::vector<NodeModel>& nodes() const { return nodes_; }
    const EdgeController& controller() const { return controller_; }
    const Exosystem& exo() const { return exo_; }
    int output_dim() const { return p_; }

    int exo_dim() const { return exo_.dim(); }
    int node_state_dim() const { return r_; }
    int controller_state_dim() const { return c_; }
    int state_dim() const { return exo_dim() + r_ + c_; }
    bool is_droop() const { return droop_; }

    /// Composite vector field over the stacked state [w; x; eta].
    Vector vector_field(const Vector& state) const;

    struct LoopOutputs {
        Vector y, z, v, lambda, u, xdot;
    };
    LoopOutputs evaluate(const Vector& state) const;

  private:
    NetworkGraph graph_;
    std::vector<NodeModel> nodes_;
    EdgeController controller_;
    Exosystem exo_;
    int p_ = 1;
    int r_ = 0, c_ = 0;
    bool droop_ = false;
    Matrix b_kron_;  // B (x) I_p
    std::vector<int> x_offsets_, w_offsets_;
};

/// Classical fixed-step RK4. Aborts with a diagnostic if any state entry
/// exceeds 1e9 in magnitude. record_stride thins the stored steps.
Trace integrate(const ClosedLoopSystem& sys, const Vector& initial_state, double dt, double horizon,
                int record_stride = 1);

/// ||(B^T (x) I_p) y(t)|| per recorded step.
std::vector<double> agreement_error(const ClosedLoopSystem& sys, const Trace& trace);

/// Max over controller pairs of ||eta_k - eta_j|| per step. Requires a
/// per-edge controller family.
std::vector<double> controller_sync_error(const ClosedLoopSystem& sys, const Trace& trace);

struct SteadyStateTrace {
    Matrix x, eta, y;
    Vector dissipation_weights;  // per-node output weights of the decay bound
};

/// Steady-state pair used by the storage metric. Supported families:
/// inventory nodes with an internal-model-type controller (eta^w = copies of
/// w), monotone integrator with constant disturbances, droop. Throws for
/// other pairings.
SteadyStateTrace steady_state_trace(const ClosedLoopSystem& sys, const Trace& trace, double x0w = 0.0);

struct StorageReport {
    int steps = 0;
    int violations = 0;
    double max_violation = 0.0;
    std::vector<double> storage;  // U(t)
};

/// Finite-difference check of dU/dt <= -decay + tol with U = V + W built
/// from the family's incremental storage functions and the steady-state
/// pair. decay is ||z||^2 (feedthrough families) or sum_i D_i |y_i - y^w|^2
/// (droop).
StorageReport storage_monotonicity(const ClosedLoopSystem& sys, const Trace& trace,
                                   const SteadyStateTrace& steady, double tol_base = 1e-4);

}  // namespace oa
