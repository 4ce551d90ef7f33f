#pragma once

#include <Eigen/Dense>

namespace oa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Moore-Penrose pseudoinverse. Singular values below tol * sigma_max are
/// treated as zero. Symmetric inputs go through an eigendecomposition,
/// everything else through an SVD.
Matrix moore_penrose(const Matrix& m, double tol = 1e-12);

/// Kronecker product M (x) I_p, p >= 1.
Matrix kron_identity(const Matrix& m, int p);

/// General Kronecker product A (x) B.
Matrix kron(const Matrix& a, const Matrix& b);

/// Numerical rank via singular values with threshold tol * sigma_max.
int numerical_rank(const Matrix& m, double tol = 1e-8);
int numerical_rank(const ComplexMatrix& m, double tol = 1e-8);

/// Orthonormal basis of the nullspace (columns), using the same threshold
/// convention as numerical_rank.
ComplexMatrix nullspace_basis(const ComplexMatrix& m, double tol = 1e-8);

/// Orthonormal basis of the column space.
ComplexMatrix range_basis(const ComplexMatrix& m, double tol = 1e-8);

/// Cosines of the principal angles between the column spaces of two
/// matrices, largest first. An entry within tol of 1 marks a nontrivial
/// intersection direction.
Eigen::VectorXd principal_angle_cosines(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace oa
