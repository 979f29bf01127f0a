#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "qindef/indefinite.hpp"

namespace qindef {

/// Inertia of the restriction of an indefinite form to a subspace.
struct GramProfile {
    Eigen::Index m0 = 0;
    Eigen::Index m_plus = 0;
    Eigen::Index m_minus = 0;

    Eigen::Index m() const { return m0 + m_plus + m_minus; }
};

/// A linear map given on a subspace by basis/image column pairs:
/// U0 (basis col i) = images col i.
struct IsometryPairs {
    QMatrix basis;
    QMatrix images;
};

/// The Gram condition Y^[*] Y = X^[*] X fails.
struct GramMismatchError : std::runtime_error {
    double residual;
    GramMismatchError(const std::string& what, double r)
        : std::runtime_error(what), residual(r) {}
};

/// The kernel condition Ker X = Ker Y fails.
struct KernelMismatchError : std::runtime_error {
    Eigen::Index kernel_x;
    Eigen::Index kernel_y;
    double residual;
    KernelMismatchError(const std::string& what, Eigen::Index kx, Eigen::Index ky, double r)
        : std::runtime_error(what), kernel_x(kx), kernel_y(ky), residual(r) {}
};

/// Factor Y = U0 X through an injective h2-isometry U0 : Im X -> Im Y.
/// Succeeds iff Y^[*] Y = X^[*] X and Ker X = Ker Y; returns U0 as pairs
/// (f_i -> g_i) where f_i is a basis of Im X, X e_i = f_i, g_i = Y e_i.
IsometryPairs factor_isometry(const QMatrix& x, const QMatrix& y, const HForm& h1,
                              const HForm& h2, const Tolerance& tol = {});

/// Inertia counts of the form restricted to span(v_basis), together with a
/// renormalized basis with diagonal Gramian, ordered isotropic vectors
/// first, then +1 vectors, then -1 vectors.
std::pair<GramProfile, QMatrix> gram_profile(const std::vector<QMatrix>& v_basis,
                                             const HForm& h, const Tolerance& tol = {});

/// Extend an isometry U0 (given on V1 = span(u0.basis)) to an H1-H2-unitary
/// U on the whole space: U* H2 U = H1 and U x = U0 x on V1. Requires
/// pi(H1) = pi(H2).
QMatrix extend_isometry(const IsometryPairs& u0, const HForm& h1, const HForm& h2,
                        const Tolerance& tol = {});

/// The ordered bases in which every Witt extension of U0 is block
/// triangular: E = (e_1..e_m, dual vectors, completion), F = U E for the
/// reference extension U, both with the same arrowhead Gramian.
struct WittBasis {
    QMatrix e;
    QMatrix f;
    GramProfile profile;
    QMatrix gramian;
};

WittBasis witt_basis(const IsometryPairs& u0, const HForm& h1, const HForm& h2,
                     const Tolerance& tol = {});

/// Free parameters of the Witt extension family: P1 a J2-unitary matrix of
/// order n-m-m0, P2 of shape (n-m-m0) x m0, P3 skew-Hermitian of order m0.
struct WittParams {
    QMatrix p1;
    QMatrix p2;
    QMatrix p3;
};

/// The Witt extension determined by (P1, P2, P3) in the given bases,
/// returned in standard coordinates and certified.
QMatrix witt_from_params(const IsometryPairs& u0, const WittBasis& basis,
                         const WittParams& params, const HForm& h1, const HForm& h2,
                         const Tolerance& tol = {});

}  // namespace qindef
