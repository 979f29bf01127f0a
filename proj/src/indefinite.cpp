#include "qindef/indefinite.hpp"

#include <cmath>

namespace qindef {

HForm::HForm(QMatrix h, Tolerance tol) : h_(std::move(h)), tol_(tol) {
    tol_.validate();
    if (h_.rows() != h_.cols()) throw InvalidInputError("HForm: H must be square");
    if (h_.rows() == 0) throw InvalidInputError("HForm: H must be nonempty");
    const double scale = 1.0 + h_.norm();
    if ((h_ - conj_transpose(h_)).norm() > tol_.residual_tol * scale)
        throw InvalidInputError("HForm: H is not Hermitian within tolerance");
    if (qrank(h_, tol_) != h_.rows()) throw InvalidInputError("HForm: H is singular");
    hinv_ = qinverse(h_, tol_);

    Eigen::VectorXd evals;
    QMatrix evecs;
    hermitian_eig(h_, evals, evecs);
    for (Eigen::Index i = 0; i < evals.size(); ++i) (evals(i) > 0 ? plus_ : minus_)++;
}

Quaternion inner_product(const QMatrix& x, const QMatrix& y, const HForm& h) {
    if (x.rows() != h.dim() || y.rows() != h.dim() || x.cols() != 1 || y.cols() != 1)
        throw InvalidInputError("inner_product: dimension mismatch");
    return (conj_transpose(y) * (h.matrix() * x))(0, 0);
}

QMatrix h_adjoint(const QMatrix& x, const HForm& h1, const HForm& h2) {
    if (x.rows() != h2.dim() || x.cols() != h1.dim())
        throw InvalidInputError("h_adjoint: X must map the h1-space into the h2-space");
    return h1.inverse() * conj_transpose(x) * h2.matrix();
}

PredicateResult is_h_selfadjoint(const QMatrix& a, const HForm& h, const Tolerance& tol) {
    if (a.rows() != a.cols() || a.rows() != h.dim())
        throw InvalidInputError("is_h_selfadjoint: dimension mismatch");
    const double res = (h_adjoint(a, h) - a).norm() / (1.0 + a.norm());
    return {res <= tol.residual_tol, res};
}

PredicateResult is_h_unitary(const QMatrix& u, const HForm& h, const Tolerance& tol) {
    if (u.rows() != u.cols() || u.rows() != h.dim())
        throw InvalidInputError("is_h_unitary: dimension mismatch");
    const double res =
        (conj_transpose(u) * h.matrix() * u - h.matrix()).norm() / h.matrix().norm();
    return {res <= tol.residual_tol, res};
}

bool is_isometry_on(const QMatrix& u0, const std::vector<QMatrix>& v_basis, const HForm& h1,
                    const HForm& h2, const Tolerance& tol) {
    const double scale =
        (1.0 + h1.matrix().norm() + u0.norm() * u0.norm() * h2.matrix().norm());
    for (const auto& x : v_basis)
        for (const auto& y : v_basis) {
            const Quaternion lhs = inner_product(u0 * x, u0 * y, h2);
            const Quaternion rhs = inner_product(x, y, h1);
            if ((lhs - rhs).abs() > tol.residual_tol * scale * x.norm() * y.norm()) return false;
        }
    return true;
}

std::vector<QMatrix> orthogonal_companion(const std::vector<QMatrix>& w_basis, const HForm& h,
                                          const Tolerance& tol) {
    if (w_basis.empty()) {
        std::vector<QMatrix> all;
        const QMatrix id = QMatrix::Identity(h.dim());
        for (Eigen::Index i = 0; i < h.dim(); ++i) all.push_back(id.col(i));
        return all;
    }
    // [x,w] = 0 for all w in W  <=>  (W* H) x = 0.
    const QMatrix w = hcat(w_basis);
    if (w.rows() != h.dim()) throw InvalidInputError("orthogonal_companion: dimension mismatch");
    return subspace_extract(conj_transpose(w) * h.matrix(), tol).kernel_basis;
}

bool is_nondegenerate(const std::vector<QMatrix>& w_basis, const HForm& h, const Tolerance& tol) {
    if (w_basis.empty()) return true;
    const QMatrix w = hcat(w_basis);
    const Eigen::Index d = qrank(w, tol);
    if (d != w.cols())
        throw InvalidInputError("is_nondegenerate: the given vectors are not a basis");
    const QMatrix gram = conj_transpose(w) * h.matrix() * w;
    if (qrank(gram, tol) != d) return false;
    // Proposition: a nondegenerate W splits the space, W (+) W^[perp] = H^n.
    const auto comp = orthogonal_companion(w_basis, h, tol);
    QMatrix joint(h.dim(), d + static_cast<Eigen::Index>(comp.size()));
    joint.set_block(0, 0, w);
    for (size_t i = 0; i < comp.size(); ++i)
        joint.set_col(d + static_cast<Eigen::Index>(i), comp[i]);
    if (joint.cols() != h.dim() || qrank(joint, tol) != h.dim())
        throw AmbiguityError("is_nondegenerate: direct-sum certification failed");
    return true;
}

QMatrix sip(Eigen::Index k) {
    if (k < 1) throw InvalidInputError("sip: k must be >= 1");
    QMatrix q(k, k);
    for (Eigen::Index i = 0; i < k; ++i) q.set(i, k - 1 - i, Quaternion(1));
    return q;
}

QMatrix jordan_block(std::complex<double> lambda, Eigen::Index k) {
    if (k < 1) throw InvalidInputError("jordan_block: k must be >= 1");
    if (lambda.imag() < 0)
        throw InvalidInputError("jordan_block: eigenvalue must lie in the closed upper half-plane");
    ComplexMatrix m = ComplexMatrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        m(i, i) = lambda;
        if (i + 1 < k) m(i, i + 1) = 1.0;
    }
    return QMatrix::FromComplex(m);
}

}  // namespace qindef
