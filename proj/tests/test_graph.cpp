#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oa/graph.hpp"

using namespace oa;

namespace {

NetworkGraph diamond() {
    return NetworkGraph(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
}

}  // namespace

TEST_CASE("incidence matrix structure") {
    const NetworkGraph g = diamond();
    const Matrix b = g.incidence();
    REQUIRE(b.rows() == 4);
    REQUIRE(b.cols() == 5);
    CHECK(b.colwise().sum().isZero(0.0));  // each column is +1/-1
    CHECK(b(0, 0) == 1.0);
    CHECK(b(1, 0) == -1.0);
    CHECK(b(2, 4) == 1.0);
    CHECK(b(3, 4) == -1.0);
    // connected graph: N(B^T) = span{1}
    Eigen::JacobiSVD<Matrix> svd(b.transpose());
    CHECK(svd.singularValues()(2) > 1e-12);
    CHECK((b.transpose() * Vector::Ones(4)).norm() == 0.0);
}

TEST_CASE("cycle space dimension") {
    CHECK(diamond().cycle_space_dim() == 2);
    CHECK(NetworkGraph(3, {{0, 1}, {1, 2}, {2, 0}}).cycle_space_dim() == 1);
    CHECK(NetworkGraph(3, {{0, 1}, {1, 2}}).cycle_space_dim() == 0);
}

TEST_CASE("graph validation") {
    CHECK_THROWS(NetworkGraph(4, {{0, 1}, {2, 3}}));  // disconnected
    CHECK_THROWS(NetworkGraph(3, {{0, 0}, {0, 1}, {1, 2}}));  // self loop
    CHECK_THROWS(NetworkGraph(2, {{0, 2}}));  // out of range
    CHECK_THROWS(NetworkGraph(2, {}));        // no edges, disconnected
}

TEST_CASE("spanning tree extraction") {
    const NetworkGraph g = diamond();
    const SpanningTree tree = extract_spanning_tree(g);
    REQUIRE(tree.edge_indices.size() == 3);
    REQUIRE(tree.incidence.cols() == 3);
    // tree incidence has full column rank and matches the selected columns
    Eigen::JacobiSVD<Matrix> svd(tree.incidence);
    CHECK(svd.singularValues()(2) > 1e-12);
    const Matrix b = g.incidence();
    for (size_t i = 0; i < tree.edge_indices.size(); ++i)
        CHECK((tree.incidence.col(static_cast<Eigen::Index>(i)) -
               b.col(tree.edge_indices[i])).norm() == 0.0);
    // BFS from node 0 over edges in listed order picks edges 0, 1, 3
    CHECK(tree.edge_indices == std::vector<int>{0, 1, 3});
}

TEST_CASE("weighted Laplacian") {
    const NetworkGraph g = diamond();
    Vector q(5);
    q << 1, 2, 3, 4, 5;
    const Matrix b = g.incidence();
    const Matrix lq = weighted_laplacian(b, q);
    const Matrix oracle = b * q.cwiseInverse().asDiagonal() * b.transpose();
    CHECK((lq - oracle).norm() < 1e-14);
    CHECK((lq - lq.transpose()).norm() == 0.0);
    CHECK((lq * Vector::Ones(4)).norm() < 1e-14);
    Vector bad = q;
    bad(2) = 0.0;
    CHECK_THROWS(weighted_laplacian(b, bad));
}

TEST_CASE("communication Laplacian couples edges sharing a node") {
    const NetworkGraph g = diamond();
    const Matrix l = g.comm_laplacian();
    REQUIRE(l.rows() == 5);
    CHECK((l - l.transpose()).norm() == 0.0);
    CHECK((l * Vector::Ones(5)).norm() < 1e-14);
    // edges 0=(0,1) and 4=(2,3) share no node
    CHECK(l(0, 4) == 0.0);
    // edges 0=(0,1) and 1=(0,2) share node 0
    CHECK(l(0, 1) < 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(l);
    CHECK(es.eigenvalues()(0) > -1e-12);  // PSD
}
