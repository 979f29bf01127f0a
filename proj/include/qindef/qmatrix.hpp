#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "qindef/quaternion.hpp"

namespace qindef {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Dense quaternion matrix stored as the complex pair A = A1 + j*A2.
///
/// All heavy numerics (SVD, eigenvalues, solves) go through the complex
/// embedding omega(A) = [[A1, conj(A2)], [-A2, conj(A1)]], which is a
/// *-algebra isomorphism onto its image.
class QMatrix {
public:
    QMatrix() = default;
    QMatrix(Eigen::Index rows, Eigen::Index cols)
        : p1_(ComplexMatrix::Zero(rows, cols)), p2_(ComplexMatrix::Zero(rows, cols)) {}
    QMatrix(ComplexMatrix part1, ComplexMatrix part2)
        : p1_(std::move(part1)), p2_(std::move(part2)) {
        if (p1_.rows() != p2_.rows() || p1_.cols() != p2_.cols())
            throw std::invalid_argument("QMatrix: part shapes differ");
    }

    static QMatrix Zero(Eigen::Index rows, Eigen::Index cols) { return QMatrix(rows, cols); }
    static QMatrix Identity(Eigen::Index n) {
        return QMatrix(ComplexMatrix::Identity(n, n), ComplexMatrix::Zero(n, n));
    }
    /// Real matrix promoted to quaternion entries.
    static QMatrix FromReal(const Eigen::MatrixXd& m) {
        return QMatrix(m.cast<std::complex<double>>(), ComplexMatrix::Zero(m.rows(), m.cols()));
    }
    static QMatrix FromComplex(const ComplexMatrix& m) {
        return QMatrix(m, ComplexMatrix::Zero(m.rows(), m.cols()));
    }

    Eigen::Index rows() const { return p1_.rows(); }
    Eigen::Index cols() const { return p1_.cols(); }

    const ComplexMatrix& part1() const { return p1_; }
    const ComplexMatrix& part2() const { return p2_; }

    Quaternion operator()(Eigen::Index i, Eigen::Index j) const {
        return Quaternion::from_parts(p1_(i, j), p2_(i, j));
    }
    void set(Eigen::Index i, Eigen::Index j, const Quaternion& q) {
        p1_(i, j) = q.c1();
        p2_(i, j) = q.c2();
    }

    QMatrix operator-() const { return QMatrix(-p1_, -p2_); }
    QMatrix operator+(const QMatrix& r) const { return QMatrix(p1_ + r.p1_, p2_ + r.p2_); }
    QMatrix operator-(const QMatrix& r) const { return QMatrix(p1_ - r.p1_, p2_ - r.p2_); }

    /// Quaternion matrix product: (A1 + jA2)(B1 + jB2)
    /// = (A1 B1 - conj(A2) B2) + j (conj(A1) B2 + A2 B1).
    QMatrix operator*(const QMatrix& r) const {
        return QMatrix(p1_ * r.p1_ - p2_.conjugate() * r.p2_,
                       p1_.conjugate() * r.p2_ + p2_ * r.p1_);
    }

    QMatrix operator*(double s) const { return QMatrix(s * p1_, s * p2_); }

    /// Right scalar action, column-wise: column v |-> v * q.
    QMatrix scaled_right(const Quaternion& q) const {
        return *this * diag_scalar(cols(), q);
    }
    /// Left scalar action: q * A.
    QMatrix scaled_left(const Quaternion& q) const {
        return diag_scalar(rows(), q) * *this;
    }

    /// Conjugate transpose over the quaternions.
    QMatrix adjoint() const { return QMatrix(p1_.adjoint(), -p2_.transpose()); }

    double norm() const { return std::sqrt(p1_.squaredNorm() + p2_.squaredNorm()); }

    QMatrix col(Eigen::Index j) const { return QMatrix(p1_.col(j), p2_.col(j)); }
    QMatrix block(Eigen::Index i, Eigen::Index j, Eigen::Index r, Eigen::Index c) const {
        return QMatrix(p1_.block(i, j, r, c), p2_.block(i, j, r, c));
    }
    void set_col(Eigen::Index j, const QMatrix& v) {
        p1_.col(j) = v.p1_;
        p2_.col(j) = v.p2_;
    }
    void set_block(Eigen::Index i, Eigen::Index j, const QMatrix& m) {
        p1_.block(i, j, m.rows(), m.cols()) = m.p1_;
        p2_.block(i, j, m.rows(), m.cols()) = m.p2_;
    }

private:
    static QMatrix diag_scalar(Eigen::Index n, const Quaternion& q) {
        QMatrix d(n, n);
        d.p1_ = ComplexMatrix::Identity(n, n) * q.c1();
        d.p2_ = ComplexMatrix::Identity(n, n) * q.c2();
        return d;
    }

    ComplexMatrix p1_, p2_;
};

inline QMatrix operator*(double s, const QMatrix& m) { return m * s; }

/// Conjugate transpose, free-function form.
inline QMatrix conj_transpose(const QMatrix& a) { return a.adjoint(); }

/// The 2n x 2n complex embedding omega(A1 + jA2) = [[A1, conj(A2)], [-A2, conj(A1)]].
/// Defined for any shape; a *-algebra homomorphism on square matrices.
ComplexMatrix omega_embed(const QMatrix& a);

/// Column-wise vector embedding phi(v1 + j v2) = (v1; -v2), satisfying
/// phi(A v) = omega(A) phi(v) and phi(v a) = phi(v) a for complex a.
ComplexMatrix phi_cols(const QMatrix& a);

/// Inverse of phi_cols.
QMatrix phi_pullback(const ComplexMatrix& z);

/// The quaternionic structure map C(x; y) = (conj(y); -conj(x)); C^2 = -I,
/// C(phi(v)) = phi(v j), and C commutes with every omega(A).
ComplexMatrix structure_map(const ComplexMatrix& z);

/// Quaternion dot u^* v (standard inner product, right-linear in v).
Quaternion dot(const QMatrix& u, const QMatrix& v);

}  // namespace qindef
