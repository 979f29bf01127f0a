#pragma once

#include <vector>

#include "qindef/numeric.hpp"
#include "qindef/qmatrix.hpp"

namespace qindef {

/// Indefinite inner product [x,y] = y* H x given by an invertible Hermitian
/// quaternion matrix H. Validates eagerly and caches the inverse and the
/// signature (counts of positive and negative eigenvalues).
class HForm {
public:
    explicit HForm(QMatrix h, Tolerance tol = {});

    const QMatrix& matrix() const { return h_; }
    const QMatrix& inverse() const { return hinv_; }
    Eigen::Index dim() const { return h_.rows(); }
    Eigen::Index pi_plus() const { return plus_; }
    Eigen::Index pi_minus() const { return minus_; }
    const Tolerance& tol() const { return tol_; }

private:
    QMatrix h_;
    QMatrix hinv_;
    Eigen::Index plus_ = 0;
    Eigen::Index minus_ = 0;
    Tolerance tol_;
};

struct PredicateResult {
    bool ok = false;
    double residual = 0.0;
    explicit operator bool() const { return ok; }
};

/// [x,y] = y* H x. Right-linear in x: [x a, y] = [x,y] a.
Quaternion inner_product(const QMatrix& x, const QMatrix& y, const HForm& h);

/// H-adjoint of X mapping the h1-space into the h2-space:
/// X^[*] = H1^{-1} X* H2, the unique Y with [Y y, x]_1 = [y, X x]_2.
QMatrix h_adjoint(const QMatrix& x, const HForm& h1, const HForm& h2);
inline QMatrix h_adjoint(const QMatrix& x, const HForm& h) { return h_adjoint(x, h, h); }

PredicateResult is_h_selfadjoint(const QMatrix& a, const HForm& h, const Tolerance& tol = {});
PredicateResult is_h_unitary(const QMatrix& u, const HForm& h, const Tolerance& tol = {});

/// True iff [U0 v_i, U0 v_j]_2 = [v_i, v_j]_1 for all basis pairs.
bool is_isometry_on(const QMatrix& u0, const std::vector<QMatrix>& v_basis, const HForm& h1,
                    const HForm& h2, const Tolerance& tol = {});

/// Basis of W^[perp] = { x : [x,w] = 0 for all w in W }.
std::vector<QMatrix> orthogonal_companion(const std::vector<QMatrix>& w_basis, const HForm& h,
                                          const Tolerance& tol = {});

/// True iff the Gramian of the basis is invertible; asserts the direct-sum
/// decomposition W + W^[perp] = H^n when true.
bool is_nondegenerate(const std::vector<QMatrix>& w_basis, const HForm& h,
                      const Tolerance& tol = {});

/// The k x k matrix with ones on the main anti-diagonal.
QMatrix sip(Eigen::Index k);

/// Upper-bidiagonal Jordan block J_k(lambda); requires Im(lambda) >= 0.
QMatrix jordan_block(std::complex<double> lambda, Eigen::Index k);

}  // namespace qindef
