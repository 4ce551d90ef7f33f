#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oa/edge_controllers.hpp"
#include "oa/feasibility.hpp"

using namespace oa;

namespace {

std::vector<LinearNode> spr_path_nodes() {
    std::vector<LinearNode> nodes;
    for (int i = 0; i < 3; ++i) {
        LinearNode n;
        n.a = Matrix::Constant(1, 1, -1.0);
        n.g = Matrix::Identity(1, 1);
        n.c = Matrix::Identity(1, 1);
        n.p = (Matrix(1, 2) << 1.0, 0.0).finished();
        nodes.push_back(n);
    }
    return nodes;
}

std::vector<LinearNode> integrator_nodes(int n) {
    std::vector<LinearNode> nodes;
    for (int i = 0; i < n; ++i) {
        LinearNode node;
        node.a = Matrix::Zero(1, 1);
        node.g = Matrix::Identity(1, 1);
        node.c = Matrix::Identity(1, 1);
        node.p = (Matrix(1, 2) << 1.0, 0.0).finished();
        nodes.push_back(node);
    }
    return nodes;
}

Exosystem three_rotations() {
    return Exosystem({LinearSkewBlock::rotation(0.5), LinearSkewBlock::rotation(1.0),
                      LinearSkewBlock::rotation(1.5)});
}

Matrix stacked_p(const std::vector<LinearNode>& nodes, int q) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(nodes.size()), q);
    int off = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        p.block(static_cast<Eigen::Index>(i), off, 1, nodes[i].p.cols()) = nodes[i].p;
        off += static_cast<int>(nodes[i].p.cols());
    }
    return p;
}

Matrix centering(int n) {
    return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

}  // namespace

TEST_CASE("regulator equations solve on the SPR path") {
    const NetworkGraph graph(3, {{0, 1}, {1, 2}});
    const auto nodes = spr_path_nodes();
    const Exosystem exo = three_rotations();
    const RegulatorSolution sol = solve_sylvester_regulator(nodes, exo, graph);
    REQUIRE(sol.feasible);
    CHECK(sol.residual_dynamics < 1e-8);
    CHECK(sol.residual_agreement < 1e-8);

    // oracle check against a hand-stacked system
    const Matrix abar = -Matrix::Identity(3, 3);
    const Matrix sbar = exo.stacked_matrix();
    const Matrix pbar = stacked_p(nodes, 6);
    const Matrix b = graph.incidence();
    CHECK((sol.pi * sbar - abar * sol.pi - b * sol.gamma - pbar).norm() < 1e-8);
    CHECK((b.transpose() * sol.pi).norm() < 1e-8);  // C = I: outputs agree on the manifold
}

TEST_CASE("rank condition passes on the SPR path with margin") {
    const NetworkGraph graph(3, {{0, 1}, {1, 2}});
    const FeasibilityReport report = rank_condition(spr_path_nodes(), three_rotations(), graph);
    CHECK(report.rank_pass);
    REQUIRE(report.rank_results.size() == 6);  // +-j0.5, +-j1.0, +-j1.5
    for (const auto& r : report.rank_results) {
        CHECK(r.pass);
        CHECK(r.margin > 1e-6);
        CHECK(r.rank == r.required);
    }
}

TEST_CASE("rank condition fails on a cycle with a cycle-space witness") {
    const NetworkGraph triangle(3, {{0, 1}, {1, 2}, {2, 0}});
    const auto nodes = integrator_nodes(3);
    const Exosystem exo = three_rotations();
    const FeasibilityReport report = rank_condition(nodes, exo, triangle);
    CHECK_FALSE(report.rank_pass);
    const Matrix b = triangle.incidence();
    for (const auto& r : report.rank_results) {
        CHECK_FALSE(r.pass);
        CHECK(r.margin < 1e-6);
        REQUIRE(r.witness_lambda.size() == 3);
        const double wnorm = r.witness_lambda.norm() + r.witness_x.norm();
        REQUIRE(wnorm > 0.5);  // witnesses are unit vectors
        // the witness flow circulates: it lies in N(B (x) I_p)
        CHECK((b.cast<std::complex<double>>() * r.witness_lambda).norm() < 1e-6);
        // and it actually annihilates the block pencil
        ComplexMatrix pencil(6, 6);
        pencil.setZero();
        pencil.topLeftCorner(3, 3) =
            -r.s * ComplexMatrix::Identity(3, 3);  // A = 0 for integrators
        pencil.topRightCorner(3, 3) = b.cast<std::complex<double>>();
        pencil.bottomLeftCorner(3, 3) = b.transpose().cast<std::complex<double>>();
        ComplexVector stacked(6);
        stacked << r.witness_x, r.witness_lambda;
        CHECK((pencil * stacked).norm() < 1e-6);
    }

    const FeasibilityReport obstructions = obstruction_check(nodes, exo, triangle);
    CHECK(obstructions.cycle_obstruction);
    CHECK(obstructions.assumption2_pass);
}

TEST_CASE("no structural obstruction on trees of SPR nodes") {
    const NetworkGraph graph(3, {{0, 1}, {1, 2}});
    const FeasibilityReport report =
        obstruction_check(spr_path_nodes(), three_rotations(), graph);
    CHECK_FALSE(report.cycle_obstruction);
    CHECK_FALSE(report.range_intersection_obstruction);
    CHECK(report.assumption2_pass);
}

TEST_CASE("SPR test at exosystem frequencies") {
    const SprResult good = spr_check(spr_path_nodes(), three_rotations());
    CHECK(good.pass);
    CHECK(good.min_eigenvalue > 0.0);  // Re 1/(1+jw) > 0

    const SprResult marginal = spr_check(integrator_nodes(3), three_rotations());
    CHECK_FALSE(marginal.pass);  // Re 1/(jw) = 0
    CHECK(std::abs(marginal.min_eigenvalue) < 1e-9);
}

TEST_CASE("accumulated imbalance closed form") {
    // two nodes, rotating supplies: (1/n) int sum cos(w_i s) ds
    const Exosystem exo({LinearSkewBlock::rotation(0.4), LinearSkewBlock::rotation(1.3)});
    Matrix p = Matrix::Zero(2, 4);
    p(0, 0) = 1.0;
    p(1, 2) = 1.0;
    Vector w0(4);
    w0 << 1, 0, 1, 0;
    const double t = 7.5;
    const double expected = 0.5 * (std::sin(0.4 * t) / 0.4 + std::sin(1.3 * t) / 1.3);
    CHECK(accumulated_imbalance(p, exo, w0, t) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(accumulated_imbalance(p, exo, w0, 0.0) == 0.0);

    const ImbalanceReport bounded = imbalance_boundedness(p, exo, w0, 50.0, 1e-2);
    CHECK_FALSE(bounded.unbounded);
    CHECK(bounded.bounded_certified);
    CHECK(bounded.drift == doctest::Approx(0.0));

    // constant unbalanced supply drifts linearly
    const Exosystem constant({StaticBlock{2}});
    Vector c0(2);
    c0 << 1.0, 0.5;
    const ImbalanceReport drifting =
        imbalance_boundedness(Matrix::Identity(2, 2), constant, c0, 50.0, 1e-2);
    CHECK(drifting.unbounded);
    CHECK(drifting.drift == doctest::Approx(0.75));  // (1 + 0.5)/2
}

TEST_CASE("optimal flow oracle satisfies the optimality system") {
    const NetworkGraph g(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
    Vector q(5);
    q << 1, 2, 3, 4, 5;
    Matrix p = Matrix::Zero(4, 8);
    for (int i = 0; i < 4; ++i) p(i, 2 * i) = 1.0;
    Vector w(8);
    w << 0.9, -0.3, 0.4, 1.1, -0.7, 0.2, 0.5, -1.0;
    const OptimalFlow flow = optimal_flow_oracle(q, g, p, w);
    const Matrix b = g.incidence();
    CHECK((b * flow.lambda + centering(4) * p * w).norm() < 1e-10);
    // stationarity Q lambda + B^T zeta = 0: Q lambda is orthogonal to cycles
    const Vector qlambda = q.asDiagonal() * flow.lambda;
    CHECK((qlambda + b.transpose() * flow.zeta).norm() < 1e-10);
    CHECK(gamma_distance(q, g, p, flow.lambda, w) < 1e-10);
    Vector perturbed = flow.lambda;
    perturbed(0) += 0.25;
    CHECK(gamma_distance(q, g, p, perturbed, w) == doctest::Approx(0.25));
}

TEST_CASE("inventory steady state is balanced and exactly driven") {
    const NetworkGraph g(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
    const Exosystem exo({LinearSkewBlock::rotation(0.1), LinearSkewBlock::rotation(0.7),
                         LinearSkewBlock::rotation(-0.4), LinearSkewBlock::rotation(-0.2)});
    Matrix p = Matrix::Zero(4, 8);
    for (int i = 0; i < 4; ++i) p(i, 2 * i) = 1.0;
    Vector q(5);
    q << 1, 2, 3, 4, 5;
    const Matrix h = design_optimal_feedforward(g, q, p);
    Vector w0 = Vector::Ones(8);
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(0.5 * k);

    const InventorySteadyState ss = inventory_steady_state(p, exo, w0, h, 2.0, grid);
    REQUIRE(ss.x.cols() == 21);
    CHECK(ss.x(0, 0) == doctest::Approx(2.0));
    for (Eigen::Index k = 0; k < ss.x.cols(); ++k) {
        // balanced levels: all nodes share one value
        CHECK((ss.x.col(k) - Vector::Constant(4, ss.x(0, k))).norm() < 1e-12);
        const Vector w = exo.closed_form(w0, grid[static_cast<size_t>(k)]);
        CHECK((ss.u.col(k) + centering(4) * p * w).norm() < 1e-10);
        CHECK((ss.lambda.col(k) - h * w).norm() < 1e-10);
    }
    // the balanced level follows the accumulated imbalance
    CHECK(ss.x(0, 20) ==
          doctest::Approx(2.0 + accumulated_imbalance(p, exo, w0, 10.0)).epsilon(1e-10));
}

TEST_CASE("droop design on a two-node line") {
    const NetworkGraph g(2, {{0, 1}});
    const Vector a = Vector::Ones(1), d = Vector::Ones(2);

    Vector p_star(2);
    p_star << 1.0, 0.0;
    const DroopDesign design = droop_design_check(g, a, d, p_star);
    CHECK(design.feasible);
    CHECK(design.y_w == doctest::Approx(0.5));
    CHECK(design.u_w(0) == doctest::Approx(-0.5));
    CHECK(design.u_w(1) == doctest::Approx(0.5));
    CHECK(design.eta_w(0) == doctest::Approx(std::asin(-0.5)));  // about -0.5236

    Vector heavy(2);
    heavy << 3.0, 0.0;  // required sine magnitude 1.5
    const DroopDesign infeasible = droop_design_check(g, a, d, heavy);
    CHECK_FALSE(infeasible.feasible);
    CHECK(infeasible.offending_edge == 0);

    CHECK_THROWS(droop_design_check(NetworkGraph(3, {{0, 1}, {1, 2}, {2, 0}}), Vector::Ones(3),
                                    Vector::Ones(3), Vector::Zero(3)));
    CHECK_THROWS(droop_design_check(g, Vector::Zero(1), d, p_star));
}
