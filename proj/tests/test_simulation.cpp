#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oa/edge_controllers.hpp"
#include "oa/simulation.hpp"

using namespace oa;

namespace {

/// Two inventory nodes with constant supplies under the monotone integrator.
ClosedLoopSystem two_inventories() {
    const NetworkGraph g(2, {{0, 1}});
    std::vector<NodeModel> nodes = {InventoryNode{Matrix::Identity(1, 1)},
                                    InventoryNode{Matrix::Identity(1, 1)}};
    return ClosedLoopSystem(g, nodes, MonotoneIntegratorController::default_map(1),
                            Exosystem({StaticBlock{2}}), 1);
}

ClosedLoopSystem droop_pair() {
    const NetworkGraph g(2, {{0, 1}});
    std::vector<NodeModel> nodes = {DroopNode{1.0, 1.0}, DroopNode{1.0, 0.0}};
    return ClosedLoopSystem(g, nodes, DroopEdgeController{Vector::Ones(1)},
                            Exosystem({StaticBlock{1}}), 1);
}

}  // namespace

TEST_CASE("state layout and validation") {
    const ClosedLoopSystem sys = two_inventories();
    CHECK(sys.exo_dim() == 2);
    CHECK(sys.node_state_dim() == 2);
    CHECK(sys.controller_state_dim() == 1);
    CHECK(sys.state_dim() == 5);
    CHECK_FALSE(sys.is_droop());
    CHECK_THROWS(sys.vector_field(Vector::Zero(4)));

    // droop nodes demand the droop controller and vice versa
    const NetworkGraph g(2, {{0, 1}});
    std::vector<NodeModel> droops = {DroopNode{1.0, 0.0}, DroopNode{1.0, 0.0}};
    CHECK_THROWS(ClosedLoopSystem(g, droops, MonotoneIntegratorController::default_map(1),
                                  Exosystem({StaticBlock{1}}), 1));
    std::vector<NodeModel> invs = {InventoryNode{Matrix::Identity(1, 1)},
                                   InventoryNode{Matrix::Identity(1, 1)}};
    CHECK_THROWS(ClosedLoopSystem(g, invs, DroopEdgeController{Vector::Ones(1)},
                                  Exosystem({StaticBlock{2}}), 1));
    // disturbance maps must cover the exosystem
    CHECK_THROWS(ClosedLoopSystem(g, invs, MonotoneIntegratorController::default_map(1),
                                  Exosystem({StaticBlock{3}}), 1));
}

TEST_CASE("interconnection identities at every evaluation") {
    const ClosedLoopSystem sys = two_inventories();
    Vector state(5);
    state << 1.0, -0.5, 0.3, 0.8, 0.2;
    const auto loop = sys.evaluate(state);
    const Matrix b = sys.graph().incidence();
    CHECK((loop.z - b.transpose() * loop.y).norm() == 0.0);
    CHECK((loop.v + loop.z).norm() == 0.0);
    CHECK((loop.u - b * loop.lambda).norm() == 0.0);
    // inventory outputs are the levels themselves
    CHECK(loop.y(0) == 0.3);
    CHECK(loop.y(1) == 0.8);
}

TEST_CASE("constant exosystem produces a constant disturbance trace") {
    const ClosedLoopSystem sys = two_inventories();
    Vector state = Vector::Zero(5);
    state(0) = 0.7;
    state(1) = -0.2;
    const Trace trace = integrate(sys, state, 1e-2, 1.0);
    for (Eigen::Index k = 0; k < trace.w.cols(); ++k) {
        CHECK(trace.w(0, k) == 0.7);
        CHECK(trace.w(1, k) == -0.2);
    }
    CHECK(trace.t.front() == 0.0);
    CHECK(trace.t.back() == doctest::Approx(1.0));
    CHECK(trace.t.size() == 101);
}

TEST_CASE("record stride thins the trace but keeps the final step") {
    const ClosedLoopSystem sys = two_inventories();
    const Trace trace = integrate(sys, Vector::Zero(5), 1e-2, 0.55, 10);
    // steps 0, 10, 20, 30, 40, 50, 55
    REQUIRE(trace.t.size() == 7);
    CHECK(trace.t[1] == doctest::Approx(0.1));
    CHECK(trace.t.back() == doctest::Approx(0.55));
}

TEST_CASE("rotating disturbances are integrated to near closed form") {
    const NetworkGraph g(2, {{0, 1}});
    std::vector<NodeModel> nodes = {InventoryNode{(Matrix(1, 2) << 1, 0).finished()},
                                    InventoryNode{(Matrix(1, 2) << 1, 0).finished()}};
    const Exosystem exo({LinearSkewBlock::rotation(0.9), LinearSkewBlock::rotation(-0.4)});
    ClosedLoopSystem sys(g, nodes, MonotoneIntegratorController::default_map(1), exo, 1);
    Vector state = Vector::Zero(7);
    state.head(4) << 1, 0, 0, 1;
    const Trace trace = integrate(sys, state, 1e-3, 2.0);
    const Vector expected = exo.closed_form(state.head(4), 2.0);
    CHECK((trace.w.rightCols(1) - expected).norm() < 1e-12);
}

TEST_CASE("divergence aborts with a diagnostic") {
    GeneralBlock unstable;
    unstable.dim = 2;
    unstable.field = [](const Vector& w) { return w; };
    const NetworkGraph g(2, {{0, 1}});
    std::vector<NodeModel> nodes = {InventoryNode{Matrix::Identity(1, 1)},
                                    InventoryNode{Matrix::Zero(1, 1)}};
    ClosedLoopSystem sys(g, nodes, MonotoneIntegratorController::default_map(1),
                         Exosystem({ExoBlock{unstable}}, {2.0}), 1);
    Vector state = Vector::Zero(5);
    state(0) = 1.0;  // w grows like e^t and crosses 1e9 near t = 21
    CHECK_THROWS_AS(integrate(sys, state, 1e-2, 30.0), std::runtime_error);
}

TEST_CASE("agreement error series matches a direct computation") {
    const ClosedLoopSystem sys = two_inventories();
    Vector state = Vector::Zero(5);
    state.segment(2, 2) << 1.0, -1.0;
    const Trace trace = integrate(sys, state, 1e-2, 0.5);
    const auto err = agreement_error(sys, trace);
    REQUIRE(err.size() == trace.t.size());
    const Matrix bt = sys.graph().incidence().transpose();
    for (size_t k = 0; k < err.size(); ++k)
        CHECK(err[k] ==
              doctest::Approx((bt * trace.y.col(static_cast<Eigen::Index>(k))).norm()));
    CHECK(err.back() < err.front());  // levels move toward each other
}

TEST_CASE("steady-state trace for the monotone integrator at rest") {
    const ClosedLoopSystem sys = two_inventories();
    // start exactly on the steady manifold: zero supplies, balanced levels
    const Trace trace = integrate(sys, Vector::Zero(5), 1e-2, 0.5);
    const SteadyStateTrace steady = steady_state_trace(sys, trace, 0.0);
    const StorageReport report = storage_monotonicity(sys, trace, steady);
    CHECK(report.violations == 0);
    for (double u : report.storage) CHECK(u == doctest::Approx(0.0));
}

TEST_CASE("monotone integrator dissipates toward balanced levels") {
    const ClosedLoopSystem sys = two_inventories();
    Vector state(5);
    state << 1.0, -0.4, 0.9, -0.6, 0.0;  // unbalanced supplies and levels
    const Trace trace = integrate(sys, state, 1e-3, 20.0);
    const double x0w = 0.5 * (0.9 - 0.6);
    const SteadyStateTrace steady = steady_state_trace(sys, trace, x0w);
    const StorageReport report = storage_monotonicity(sys, trace, steady);
    CHECK(report.violations == 0);
    CHECK(report.storage.back() < 1e-8);
    CHECK(agreement_error(sys, trace).back() < 1e-6);
}

TEST_CASE("droop loop synchronizes and its Bregman storage decays") {
    const ClosedLoopSystem sys = droop_pair();
    CHECK(sys.is_droop());
    CHECK(sys.controller_state_dim() == 0);
    Vector state = Vector::Zero(3);
    state.tail(2) << 0.6, 0.05;  // theta close to the steady angles
    const Trace trace = integrate(sys, state, 1e-3, 60.0);
    const SteadyStateTrace steady = steady_state_trace(sys, trace);
    // synchronized frequency: sum P* / sum D = 0.5
    CHECK(steady.y(0, 0) == doctest::Approx(0.5));
    for (Eigen::Index i = 0; i < 2; ++i)
        CHECK(std::abs(trace.y(i, trace.y.cols() - 1) - 0.5) < 1e-6);
    const StorageReport report = storage_monotonicity(sys, trace, steady);
    CHECK(report.violations == 0);
}

TEST_CASE("controller sync error needs a per-edge family") {
    const ClosedLoopSystem sys = two_inventories();
    const Trace trace = integrate(sys, Vector::Zero(5), 1e-2, 0.1);
    CHECK_THROWS(controller_sync_error(sys, trace));
}
