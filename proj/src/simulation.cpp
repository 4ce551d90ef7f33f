#include "oa/simulation.hpp"

#include <cmath>
#include <stdexcept>

#include "oa/feasibility.hpp"

namespace oa {

ClosedLoopSystem::ClosedLoopSystem(NetworkGraph graph, std::vector<NodeModel> nodes,
                                   EdgeController controller, Exosystem exo, int p)
    : graph_(std::move(graph)),
      nodes_(std::move(nodes)),
      controller_(std::move(controller)),
      exo_(std::move(exo)),
      p_(p) {
    if (static_cast<int>(nodes_.size()) != graph_.node_count())
        throw std::invalid_argument("ClosedLoopSystem: one node model per graph node expected");
    int q_total = 0;
    int n_droop = 0, n_inventory = 0;
    for (size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (oa::node_output_dim(n) != p_)
            throw std::invalid_argument("ClosedLoopSystem: node output dimension != p");
        x_offsets_.push_back(r_);
        w_offsets_.push_back(q_total);
        r_ += oa::node_state_dim(n);
        if (std::holds_alternative<DroopNode>(n)) ++n_droop;
        if (std::holds_alternative<InventoryNode>(n)) ++n_inventory;
        q_total += std::visit(
            [](const auto& nn) -> int {
                using T = std::decay_t<decltype(nn)>;
                if constexpr (std::is_same_v<T, DroopNode>) return 0;
                else return static_cast<int>(nn.p.cols());
            },
            n);
    }
    droop_ = std::holds_alternative<DroopEdgeController>(controller_);
    if ((n_droop > 0) != droop_)
        throw std::invalid_argument("ClosedLoopSystem: droop nodes require the droop edge controller");
    if (droop_) {
        if (n_droop != graph_.node_count())
            throw std::invalid_argument("ClosedLoopSystem: mixed droop and non-droop nodes");
        if (graph_.cycle_space_dim() != 0)
            throw std::invalid_argument("ClosedLoopSystem: droop loop requires an acyclic graph");
        if (p_ != 1) throw std::invalid_argument("ClosedLoopSystem: droop outputs are scalar");
    }
    if (n_inventory > 0 && p_ != 1)
        throw std::invalid_argument("ClosedLoopSystem: inventory nodes require p = 1");
    if (!droop_ && q_total != exo_.dim())
        throw std::invalid_argument("ClosedLoopSystem: disturbance maps do not cover the exosystem");
    c_ = droop_ ? 0 : oa::controller_state_dim(controller_);
    b_kron_ = kron_identity(graph_.incidence(), p_);
    // controller interface width must match the edge space
    if (!droop_) {
        const Vector probe = Vector::Zero(c_);
        controller_vector_field(controller_, probe, Vector::Zero(graph_.edge_count() * p_));
    }
}

ClosedLoopSystem::LoopOutputs ClosedLoopSystem::evaluate(const Vector& state) const {
    const int q = exo_dim(), mp = graph_.edge_count() * p_;
    const Vector w = state.head(q);
    const Vector x = state.segment(q, r_);
    LoopOutputs out;

    if (droop_) {
        const auto& ctrl = std::get<DroopEdgeController>(controller_);
        const Matrix b = graph_.incidence();
        // the stateless edge integrates eta' = v = -B^T x', so eta = -B^T x
        const Vector eta = -b.transpose() * x;
        out.lambda = controller_output(controller_, eta, Vector());
        out.u = b * out.lambda;
        out.xdot.resize(r_);
        out.y.resize(r_);
        for (size_t i = 0; i < nodes_.size(); ++i) {
            const auto& n = std::get<DroopNode>(nodes_[i]);
            out.xdot(static_cast<Eigen::Index>(i)) =
                (n.p_star + out.u(static_cast<Eigen::Index>(i))) / n.d;
        }
        out.y = out.xdot;
        out.z = b.transpose() * out.y;
        out.v = -out.z;
        (void)ctrl;
        return out;
    }

    auto disturbance_dim = [](const NodeModel& n) {
        return std::visit(
            [](const auto& nn) -> int {
                using T = std::decay_t<decltype(nn)>;
                if constexpr (std::is_same_v<T, DroopNode>) return 0;
                else return static_cast<int>(nn.p.cols());
            },
            n);
    };

    const Vector eta = state.tail(c_);
    out.y.resize(graph_.node_count() * p_);
    for (size_t i = 0; i < nodes_.size(); ++i) {
        const int qi = disturbance_dim(nodes_[i]);
        out.y.segment(static_cast<Eigen::Index>(i) * p_, p_) = node_output(
            nodes_[i], x.segment(x_offsets_[i], oa::node_state_dim(nodes_[i])),
            w.segment(w_offsets_[i], qi));
    }
    out.z = b_kron_.transpose() * out.y;
    out.v = -out.z;
    const Vector nu = controller_has_feedthrough(controller_) ? out.v : Vector();
    out.lambda = controller_output(controller_, eta, nu);
    if (out.lambda.size() != mp)
        throw std::invalid_argument("ClosedLoopSystem: controller output dimension mismatch");
    out.u = b_kron_ * out.lambda;
    out.xdot.resize(r_);
    for (size_t i = 0; i < nodes_.size(); ++i) {
        const int qi = disturbance_dim(nodes_[i]);
        out.xdot.segment(x_offsets_[i], oa::node_state_dim(nodes_[i])) = node_vector_field(
            nodes_[i], x.segment(x_offsets_[i], oa::node_state_dim(nodes_[i])),
            out.u.segment(static_cast<Eigen::Index>(i) * p_, p_),
            w.segment(w_offsets_[i], qi));
    }
    return out;
}

Vector ClosedLoopSystem::vector_field(const Vector& state) const {
    if (state.size() != state_dim())
        throw std::invalid_argument("ClosedLoopSystem: state dimension mismatch");
    const LoopOutputs loop = evaluate(state);
    Vector dot(state_dim());
    dot.head(exo_dim()) = exo_.vector_field(state.head(exo_dim()));
    dot.segment(exo_dim(), r_) = loop.xdot;
    if (c_ > 0) dot.tail(c_) = controller_vector_field(controller_, state.tail(c_), loop.v);
    return dot;
}

Trace integrate(const ClosedLoopSystem& sys, const Vector& initial_state, double dt,
                double horizon, int record_stride) {
    if (dt <= 0.0 || horizon < dt) throw std::invalid_argument("integrate: need dt > 0, T >= dt");
    if (record_stride < 1) throw std::invalid_argument("integrate: record_stride >= 1");
    if (!initial_state.allFinite()) throw std::invalid_argument("integrate: nonfinite initial state");

    const long steps = std::lround(horizon / dt);
    const int q = sys.exo_dim(), r = sys.node_state_dim();
    const int eta_dim = sys.is_droop() ? sys.graph().edge_count() : sys.controller_state_dim();
    const long records = steps / record_stride + 1 + (steps % record_stride != 0 ? 1 : 0);

    Trace trace;
    trace.dt = dt;
    trace.t.reserve(static_cast<size_t>(records));
    trace.w.resize(q, records);
    trace.x.resize(r, records);
    trace.eta.resize(eta_dim, records);
    trace.y.resize(sys.graph().node_count() * sys.output_dim(), records);
    trace.u.resize(sys.graph().node_count() * sys.output_dim(), records);
    trace.lambda.resize(sys.graph().edge_count() * sys.output_dim(), records);

    Vector state = initial_state;
    long written = 0;
    auto record = [&](double t) {
        const auto loop = sys.evaluate(state);
        trace.t.push_back(t);
        trace.w.col(written) = state.head(q);
        trace.x.col(written) = state.segment(q, r);
        if (sys.is_droop())
            trace.eta.col(written) = -sys.graph().incidence().transpose() * state.segment(q, r);
        else
            trace.eta.col(written) = state.tail(sys.controller_state_dim());
        trace.y.col(written) = loop.y;
        trace.u.col(written) = loop.u;
        trace.lambda.col(written) = loop.lambda;
        ++written;
    };

    record(0.0);
    for (long k = 0; k < steps; ++k) {
        const Vector k1 = sys.vector_field(state);
        const Vector k2 = sys.vector_field(state + 0.5 * dt * k1);
        const Vector k3 = sys.vector_field(state + 0.5 * dt * k2);
        const Vector k4 = sys.vector_field(state + dt * k3);
        state += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t = static_cast<double>(k + 1) * dt;
        if (state.cwiseAbs().maxCoeff() > 1e9)
            throw std::runtime_error("integrate: divergence at t = " + std::to_string(t));
        if ((k + 1) % record_stride == 0 || k + 1 == steps) record(t);
    }
    trace.w.conservativeResize(Eigen::NoChange, written);
    trace.x.conservativeResize(Eigen::NoChange, written);
    trace.eta.conservativeResize(Eigen::NoChange, written);
    trace.y.conservativeResize(Eigen::NoChange, written);
    trace.u.conservativeResize(Eigen::NoChange, written);
    trace.lambda.conservativeResize(Eigen::NoChange, written);
    return trace;
}

std::vector<double> agreement_error(const ClosedLoopSystem& sys, const Trace& trace) {
    const Matrix bt = kron_identity(sys.graph().incidence(), sys.output_dim()).transpose();
    std::vector<double> err;
    err.reserve(trace.t.size());
    for (Eigen::Index k = 0; k < trace.y.cols(); ++k)
        err.push_back((bt * trace.y.col(k)).norm());
    return err;
}

std::vector<double> controller_sync_error(const ClosedLoopSystem& sys, const Trace& trace) {
    int m = 0, d = 0;
    if (const auto* comm = std::get_if<CommAugmentedController>(&sys.controller())) {
        m = comm->core.edge_count();
        d = comm->core.copy_dim();
    } else if (const auto* im = std::get_if<InternalModelController>(&sys.controller())) {
        m = im->edge_count();
        d = im->copy_dim();
    } else {
        throw std::invalid_argument("controller_sync_error: needs a per-edge controller family");
    }
    std::vector<double> err;
    err.reserve(trace.t.size());
    for (Eigen::Index col = 0; col < trace.eta.cols(); ++col) {
        double worst = 0.0;
        for (int k = 0; k < m; ++k)
            for (int j = k + 1; j < m; ++j)
                worst = std::max(worst, (trace.eta.col(col).segment(k * d, d) -
                                         trace.eta.col(col).segment(j * d, d)).norm());
        err.push_back(worst);
    }
    return err;
}

namespace {

Matrix stacked_inventory_p(const std::vector<NodeModel>& nodes, int q) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(nodes.size()), q);
    int off = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        const auto& inv = std::get<InventoryNode>(nodes[i]);
        p.block(static_cast<Eigen::Index>(i), off, 1, inv.p.cols()) = inv.p;
        off += static_cast<int>(inv.p.cols());
    }
    return p;
}

double invert_monotone_map(const MonotoneIntegratorController& ctrl, double target) {
    // psi is strongly monotone; bisection on an expanding bracket
    double lo = -1.0, hi = 1.0;
    while (ctrl.psi(lo) > target) lo *= 2.0;
    while (ctrl.psi(hi) < target) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (ctrl.psi(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SteadyStateTrace steady_state_trace(const ClosedLoopSystem& sys, const Trace& trace, double x0w) {
    const Eigen::Index cols = trace.w.cols();
    SteadyStateTrace steady;

    if (sys.is_droop()) {
        const auto& ctrl = std::get<DroopEdgeController>(sys.controller());
        Vector d(sys.graph().node_count()), p_star(sys.graph().node_count());
        for (int i = 0; i < sys.graph().node_count(); ++i) {
            const auto& n = std::get<DroopNode>(sys.nodes()[static_cast<size_t>(i)]);
            d(i) = n.d;
            p_star(i) = n.p_star;
        }
        const DroopDesign design = droop_design_check(sys.graph(), ctrl.a, d, p_star);
        if (!design.feasible)
            throw std::runtime_error("steady_state_trace: droop embedding infeasible");
        steady.x = Matrix::Zero(0, cols);
        steady.eta = design.eta_w.replicate(1, cols);
        steady.y = Matrix::Constant(sys.graph().node_count(), cols, design.y_w);
        steady.dissipation_weights = d;
        return steady;
    }

    bool inventory = true;
    for (const auto& n : sys.nodes())
        if (!std::holds_alternative<InventoryNode>(n)) inventory = false;
    if (!inventory)
        throw std::runtime_error("steady_state_trace: no steady-state closed form for this family");

    const Matrix p = stacked_inventory_p(sys.nodes(), sys.exo_dim());
    const Vector w0 = trace.w.col(0);

    const Matrix* h = nullptr;
    if (const auto* comm = std::get_if<CommAugmentedController>(&sys.controller())) h = &comm->core.h;
    else if (const auto* im = std::get_if<InternalModelController>(&sys.controller())) h = &im->h;
    else if (const auto* opt = std::get_if<OptimalDistributionController>(&sys.controller())) h = &opt->h;

    if (h != nullptr) {
        const InventorySteadyState ss =
            inventory_steady_state(p, sys.exo(), w0, *h, x0w, trace.t);
        steady.x = ss.x;
        steady.y = ss.x;
        if (std::holds_alternative<OptimalDistributionController>(sys.controller())) {
            steady.eta = trace.w;  // eta^w = w
        } else {
            const int m = sys.graph().edge_count();
            steady.eta.resize(static_cast<Eigen::Index>(m) * sys.exo_dim(), cols);
            for (int k = 0; k < m; ++k)
                steady.eta.middleRows(static_cast<Eigen::Index>(k) * sys.exo_dim(), sys.exo_dim()) =
                    trace.w;  // eta_k^w = w
        }
        steady.dissipation_weights = Vector::Ones(sys.graph().node_count());
        return steady;
    }

    if (const auto* mono = std::get_if<MonotoneIntegratorController>(&sys.controller())) {
        // constant-disturbance case: lambda^w = H_tree w, eta^w = psi^-1(lambda^w)
        if ((sys.exo().vector_field(w0)).norm() > 0.0)
            throw std::runtime_error("steady_state_trace: monotone integrator needs constant w");
        const Matrix h_tree = design_tree_feedforward(sys.graph(), p);
        const Vector lambda_w = h_tree * w0;
        Vector eta_w(lambda_w.size());
        for (Eigen::Index k = 0; k < lambda_w.size(); ++k)
            eta_w(k) = invert_monotone_map(*mono, lambda_w(k));
        const double rate = (p.colwise().sum() * w0).value() / sys.graph().node_count();
        steady.x.resize(sys.graph().node_count(), cols);
        for (Eigen::Index k = 0; k < cols; ++k)
            steady.x.col(k).setConstant(x0w + rate * trace.t[static_cast<size_t>(k)]);
        steady.y = steady.x;
        steady.eta = eta_w.replicate(1, cols);
        steady.dissipation_weights = Vector::Ones(sys.graph().node_count());
        return steady;
    }

    throw std::runtime_error("steady_state_trace: unsupported controller family");
}

StorageReport storage_monotonicity(const ClosedLoopSystem& sys, const Trace& trace,
                                   const SteadyStateTrace& steady, double tol_base) {
    if (steady.eta.cols() != trace.eta.cols())
        throw std::invalid_argument("storage_monotonicity: grid mismatch");
    const Eigen::Index cols = trace.t.size();
    const Matrix bt = kron_identity(sys.graph().incidence(), sys.output_dim()).transpose();

    auto storage_at = [&](Eigen::Index k) -> double {
        double u_val = 0.0;
        if (steady.x.rows() > 0) u_val += 0.5 * (trace.x.col(k) - steady.x.col(k)).squaredNorm();
        if (sys.is_droop()) {
            const auto& ctrl = std::get<DroopEdgeController>(sys.controller());
            for (Eigen::Index e = 0; e < ctrl.a.size(); ++e) {
                const double eta = trace.eta(e, k), eta_w = steady.eta(e, k);
                u_val += ctrl.a(e) * ((1.0 - std::cos(eta)) - (1.0 - std::cos(eta_w)) -
                                      std::sin(eta_w) * (eta - eta_w));
            }
        } else if (const auto* mono =
                       std::get_if<MonotoneIntegratorController>(&sys.controller())) {
            for (Eigen::Index e = 0; e < trace.eta.rows(); ++e) {
                const double eta = trace.eta(e, k), eta_w = steady.eta(e, k);
                u_val += mono->potential(eta) - mono->potential(eta_w) -
                         mono->psi(eta_w) * (eta - eta_w);
            }
        } else {
            u_val += 0.5 * (trace.eta.col(k) - steady.eta.col(k)).squaredNorm();
        }
        return u_val;
    };

    auto decay_at = [&](Eigen::Index k) -> double {
        if (sys.is_droop()) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < steady.dissipation_weights.size(); ++i) {
                const double dy = trace.y(i, k) - steady.y(i, k);
                sum += steady.dissipation_weights(i) * dy * dy;
            }
            return sum;
        }
        return (bt * trace.y.col(k)).squaredNorm();
    };

    StorageReport report;
    report.steps = static_cast<int>(cols) - 1;
    report.storage.reserve(static_cast<size_t>(cols));
    for (Eigen::Index k = 0; k < cols; ++k) report.storage.push_back(storage_at(k));
    for (Eigen::Index k = 0; k + 1 < cols; ++k) {
        const double dt = trace.t[static_cast<size_t>(k) + 1] - trace.t[static_cast<size_t>(k)];
        const double udot = (report.storage[static_cast<size_t>(k) + 1] -
                             report.storage[static_cast<size_t>(k)]) / dt;
        const double decay = 0.5 * (decay_at(k) + decay_at(k + 1));
        const double tol = tol_base * (1.0 + decay);
        if (udot > -decay + tol) {
            ++report.violations;
            report.max_violation = std::max(report.max_violation, udot + decay - tol);
        }
    }
    return report;
}

}  // namespace oa
