#include "oa/linalg.hpp"

#include <stdexcept>

namespace oa {

Matrix moore_penrose(const Matrix& m, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("moore_penrose: tol must be positive");
    if (m.size() == 0) return m.transpose();

    const bool symmetric = m.rows() == m.cols() &&
                           (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
    if (symmetric) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        const Vector& d = es.eigenvalues();
        const double cutoff = tol * d.cwiseAbs().maxCoeff();
        Vector dinv = Vector::Zero(d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (std::abs(d[i]) > cutoff) dinv[i] = 1.0 / d[i];
        return es.eigenvectors() * dinv.asDiagonal() * es.eigenvectors().transpose();
    }

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol * (s.size() > 0 ? s[0] : 0.0);
    Vector sinv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) sinv[i] = 1.0 / s[i];
    return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

Matrix kron_identity(const Matrix& m, int p) {
    if (p < 1) throw std::invalid_argument("kron_identity: p must be >= 1");
    if (p == 1) return m;
    Matrix out = Matrix::Zero(m.rows() * p, m.cols() * p);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0)
                out.block(i * p, j * p, p, p) = m(i, j) * Matrix::Identity(p, p);
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

template <typename Mat>
int rank_impl(const Mat& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    const double cutoff = tol * s[0];
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) ++r;
    return r;
}

}  // namespace

int numerical_rank(const Matrix& m, double tol) { return rank_impl(m, tol); }
int numerical_rank(const ComplexMatrix& m, double tol) { return rank_impl(m, tol); }

ComplexMatrix nullspace_basis(const ComplexMatrix& m, double tol) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = (s.size() > 0 ? tol * s[0] : 0.0);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) ++r;
    return svd.matrixV().rightCols(m.cols() - r);
}

ComplexMatrix range_basis(const ComplexMatrix& m, double tol) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    const double cutoff = (s.size() > 0 ? tol * s[0] : 0.0);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) ++r;
    return svd.matrixU().leftCols(r);
}

Eigen::VectorXd principal_angle_cosines(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() == 0 || b.cols() == 0) return Eigen::VectorXd();
    Eigen::JacobiSVD<ComplexMatrix> svd(a.adjoint() * b);
    return svd.singularValues();
}

}  // namespace oa
