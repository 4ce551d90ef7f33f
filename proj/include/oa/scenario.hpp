#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oa/simulation.hpp"

namespace oa {

/// All validation problems found in a scenario file, collected before
/// throwing.
class ScenarioError : public std::runtime_error {
  public:
    explicit ScenarioError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

  private:
    std::vector<std::string> errors_;
};

/// Declarative description of one closed-loop run. The JSON syntax is
/// documented in README.md; unknown keys are rejected.
struct Scenario {
    std::string id;
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;

    std::string node_family;  // inventory | linear | droop
    std::vector<NodeModel> nodes;

    std::string controller_family;  // internal_model | comm_augmented | static |
                                    // monotone_integrator | optimal_distribution | droop
    std::string design;             // tree | optimal | explicit | (empty)
    Matrix h_explicit;
    double comm_gain = 1.0;
    bool feedthrough = true;
    Vector droop_a;

    std::vector<ExoBlock> exo_blocks;

    Vector q_weights;  // optimal-routing weights; empty when unused
    Vector w0, x0, eta0;

    double dt = 1e-3;
    double horizon = 1.0;
    int record_stride = 1;
    unsigned seed = 0;
    int output_dim = 1;

    double tol_agreement = 1e-2;
    double tol_gamma = 1e-2;
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>");

/// Canonical serialization; parse(emit(s)) is semantically identical.
std::string emit_scenario(const Scenario& scenario);

/// Stacked n x q disturbance map of the scenario's nodes.
Matrix scenario_disturbance_map(const Scenario& scenario);

/// Feedforward matrix selected by the scenario's design directive.
Matrix scenario_feedforward(const Scenario& scenario);

ClosedLoopSystem build_system(const Scenario& scenario);

/// [w0; x0; eta0] padded with zeros where the scenario leaves a block empty.
Vector initial_state(const Scenario& scenario, const ClosedLoopSystem& sys);

/// CSV with header t,w_0..,x_0..,eta_0..,y_0..,lambda_0..,agreement_error,
/// gamma_distance; 17 significant digits; gamma column is nan when the
/// scenario has no routing weights.
void emit_trace(const Trace& trace, const std::vector<double>& agreement,
                const std::vector<double>& gamma, const std::string& path);

/// Reads a trace CSV back; dimensions are recovered from the header.
struct StoredTrace {
    std::vector<double> t;
    Matrix w, x, eta, y, lambda;
    std::vector<double> agreement, gamma;
};
StoredTrace read_trace(const std::string& path);

/// Human-readable report with machine-parseable key: value lines.
void emit_report(const std::vector<std::pair<std::string, std::string>>& entries,
                 const std::string& path);

}  // namespace oa
