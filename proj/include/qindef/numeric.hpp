#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "qindef/qmatrix.hpp"

namespace qindef {

/// Thresholds used by every rank / residual / clustering decision.
struct Tolerance {
    double rank_tol = 1e-10;       ///< relative singular-value threshold
    double residual_tol = 1e-8;    ///< certification threshold
    double cluster_radius = 1e-7;  ///< eigenvalue grouping radius

    void validate() const {
        if (rank_tol <= 0 || residual_tol <= 0 || cluster_radius <= 0)
            throw std::invalid_argument("Tolerance: thresholds must be positive");
    }
};

/// Input that violates an operation's contract (shape, structure, convention).
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical decision (rank, clustering) could not be certified.
struct AmbiguityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The requested object provably does not exist for the given input.
struct NonexistenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SubspaceDecomposition {
    std::vector<QMatrix> kernel_basis;
    std::vector<QMatrix> image_basis;
    Eigen::Index rank = 0;
};

/// Inverse of the omega embedding. Throws InvalidInputError when the block
/// pattern of an Omega_{2n} matrix is violated beyond residual_tol.
QMatrix omega_extract(const ComplexMatrix& m, const Tolerance& tol = {});

/// Kernel and image bases plus rank, decided by singular values of the
/// embedding at threshold rank_tol * sigma_max.
SubspaceDecomposition subspace_extract(const QMatrix& a, const Tolerance& tol = {});

Eigen::Index qrank(const QMatrix& a, const Tolerance& tol = {});

/// The n standard (right) eigenvalues, normalized to the closed upper
/// half-plane; values within cluster_radius of the real axis are snapped
/// to real.
std::vector<std::complex<double>> right_eigenvalues(const QMatrix& a, const Tolerance& tol = {});

/// Solve A X = B over the quaternions (least squares via the embedding).
QMatrix qsolve(const QMatrix& a, const QMatrix& b);

/// Minimum-norm least-squares solution of A X = B.
QMatrix qsolve_minnorm(const QMatrix& a, const QMatrix& b);

QMatrix qinverse(const QMatrix& a, const Tolerance& tol = {});

/// Orthonormal quaternion basis of the column span (rank-revealing).
QMatrix orthonormal_span(const QMatrix& a, const Tolerance& tol = {});

/// Eigendecomposition of a Hermitian quaternion matrix: real eigenvalues
/// (ascending) and a unitary quaternion eigenvector matrix.
void hermitian_eig(const QMatrix& a, Eigen::VectorXd& evals, QMatrix& evecs);

/// Select, from a C-invariant complex column span, columns whose phi
/// pullbacks form a quaternion basis of the corresponding subspace.
/// Input columns are processed in order; returns the accepted indices.
std::vector<Eigen::Index> structure_select(const ComplexMatrix& cols, double drop_tol = 1e-8);

QMatrix hcat(const std::vector<QMatrix>& cols);

}  // namespace qindef
