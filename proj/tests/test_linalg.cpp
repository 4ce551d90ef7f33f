#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oa/graph.hpp"
#include "oa/linalg.hpp"

using namespace oa;

namespace {

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> dist;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

double penrose_residual(const Matrix& m, const Matrix& pinv) {
    const double scale = 1.0 + m.norm();
    double worst = (m * pinv * m - m).norm() / scale;
    worst = std::max(worst, (pinv * m * pinv - pinv).norm() / (1.0 + pinv.norm()));
    worst = std::max(worst, (m * pinv - (m * pinv).transpose()).norm() / scale);
    worst = std::max(worst, (pinv * m - (pinv * m).transpose()).norm() / scale);
    return worst;
}

/// Independent pseudoinverse oracle via a plain SVD reassembly.
Matrix pinv_oracle(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    Matrix sp = Matrix::Zero(m.cols(), m.rows());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > 1e-12 * s[0]) sp(i, i) = 1.0 / s[i];
    return svd.matrixV() * sp * svd.matrixU().transpose();
}

}  // namespace

TEST_CASE("pseudoinverse satisfies all four Penrose identities on random matrices") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> size(1, 9);
    for (int trial = 0; trial < 100; ++trial) {
        const int rows = size(rng), cols = size(rng);
        Matrix m = random_matrix(rng, rows, cols);
        if (trial % 3 == 0 && rows > 1 && cols > 1)  // force rank deficiency
            m = random_matrix(rng, rows, 1) * random_matrix(rng, 1, cols);
        const Matrix pinv = moore_penrose(m);
        CHECK(penrose_residual(m, pinv) < 1e-10);
        CHECK((pinv - pinv_oracle(m)).norm() < 1e-8 * (1.0 + pinv.norm()));
    }
}

TEST_CASE("Laplacian pseudoinverse reproduces the centering projector") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> nodes(2, 8);
        const int n = nodes(rng);
        std::vector<std::pair<int, int>> edges;
        for (int i = 1; i < n; ++i) {  // random spanning tree plus extras
            std::uniform_int_distribution<int> parent(0, i - 1);
            edges.emplace_back(parent(rng), i);
        }
        std::uniform_int_distribution<int> any(0, n - 1);
        for (int e = 0; e < n / 2; ++e) {
            const int a = any(rng), b = any(rng);
            if (a != b) edges.emplace_back(a, b);
        }
        NetworkGraph graph(n, edges);
        std::uniform_real_distribution<double> weight(0.5, 5.0);
        Vector q(graph.edge_count());
        for (Eigen::Index k = 0; k < q.size(); ++k) q(k) = weight(rng);
        const Matrix lq = weighted_laplacian(graph.incidence(), q);
        const Matrix pinv = moore_penrose(lq);
        CHECK(penrose_residual(lq, pinv) < 1e-10);
        const Matrix delta =
            Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
        CHECK((pinv * lq - delta).norm() < 1e-10);
    }
}

TEST_CASE("pseudoinverse handles degenerate shapes") {
    CHECK(moore_penrose(Matrix::Zero(3, 2)).isZero());
    const Matrix one = Matrix::Constant(1, 1, 2.0);
    CHECK(moore_penrose(one)(0, 0) == doctest::Approx(0.5));
    CHECK_THROWS(moore_penrose(Matrix::Identity(2, 2), -1.0));
}

TEST_CASE("kron_identity matches the generic Kronecker product") {
    std::mt19937_64 rng(3);
    const Matrix m = random_matrix(rng, 3, 4);
    CHECK((kron_identity(m, 2) - kron(m, Matrix::Identity(2, 2))).norm() == 0.0);
    CHECK((kron_identity(m, 1) - m).norm() == 0.0);
    CHECK_THROWS(kron_identity(m, 0));
}

TEST_CASE("kron obeys the mixed-product rule") {
    std::mt19937_64 rng(5);
    const Matrix a = random_matrix(rng, 2, 3), b = random_matrix(rng, 3, 2);
    const Matrix c = random_matrix(rng, 4, 2), d = random_matrix(rng, 2, 3);
    const Matrix lhs = kron(a, c) * kron(b, d);
    const Matrix rhs = kron(Matrix(a * b), Matrix(c * d));
    CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
}

TEST_CASE("numerical rank, nullspace, and range") {
    Matrix m(3, 3);
    m << 1, 2, 3, 2, 4, 6, 0, 0, 1;  // rank 2
    CHECK(numerical_rank(m) == 2);
    const ComplexMatrix null = nullspace_basis(m.cast<std::complex<double>>());
    REQUIRE(null.cols() == 1);
    CHECK((m.cast<std::complex<double>>() * null).norm() < 1e-12);
    const ComplexMatrix range = range_basis(m.cast<std::complex<double>>());
    CHECK(range.cols() == 2);
    CHECK((range.adjoint() * range - ComplexMatrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("principal angle cosines detect overlap and orthogonality") {
    ComplexMatrix a = ComplexMatrix::Zero(3, 1), b = ComplexMatrix::Zero(3, 1);
    a(0, 0) = 1.0;
    b(0, 0) = 1.0;
    CHECK(principal_angle_cosines(a, b)(0) == doctest::Approx(1.0));
    b(0, 0) = 0.0;
    b(1, 0) = 1.0;
    CHECK(principal_angle_cosines(a, b)(0) == doctest::Approx(0.0));
    CHECK(principal_angle_cosines(a, ComplexMatrix(3, 0)).size() == 0);
}
