#include "qindef/witt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qindef {

namespace {

Quaternion ip(const QMatrix& x, const QMatrix& y, const QMatrix& h) {
    return (conj_transpose(y) * (h * x))(0, 0);
}

std::vector<QMatrix> split_cols(const QMatrix& m) {
    std::vector<QMatrix> out;
    out.reserve(static_cast<size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m.col(j));
    return out;
}

/// Congruence transform T so that basis*T has a diagonal Gramian with
/// entries ordered 0 (m0 of them), then +1, then -1.
struct Diagonalized {
    GramProfile prof;
    QMatrix t;
};

Diagonalized diagonalize_gram(const QMatrix& basis, const HForm& h, const Tolerance& tol) {
    const Eigen::Index m = basis.cols();
    Diagonalized out;
    out.t = QMatrix::Identity(m);
    if (m == 0) return out;
    const QMatrix g = conj_transpose(basis) * (h.matrix() * basis);
    Eigen::VectorXd evals;
    QMatrix evecs;
    hermitian_eig(g, evals, evecs);
    const double thr = tol.rank_tol * std::max(1.0, evals.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> zero, plus, minus;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(evals(i)) <= thr)
            zero.push_back(i);
        else if (evals(i) > 0)
            plus.push_back(i);
        else
            minus.push_back(i);
    }
    out.prof.m0 = static_cast<Eigen::Index>(zero.size());
    out.prof.m_plus = static_cast<Eigen::Index>(plus.size());
    out.prof.m_minus = static_cast<Eigen::Index>(minus.size());
    QMatrix t(m, m);
    Eigen::Index pos = 0;
    for (Eigen::Index i : zero) t.set_col(pos++, evecs.col(i));
    for (Eigen::Index i : plus) t.set_col(pos++, evecs.col(i) * (1.0 / std::sqrt(evals(i))));
    for (Eigen::Index i : minus) t.set_col(pos++, evecs.col(i) * (1.0 / std::sqrt(-evals(i))));
    out.t = t;
    return out;
}

/// One side of the extension: normalized subspace basis, dual vectors to
/// the isotropic part, and a +/-1-orthonormal basis of the orthogonal
/// companion of their joint span.
struct SideBasis {
    QMatrix em;    ///< n x m, Gramian diag(0 x m0, +1 x m_plus, -1 x m_minus)
    QMatrix dual;  ///< n x m0, [dual_j, em_i] = delta_ij, mutually isotropic
    QMatrix comp;  ///< n x (n - m - m0), Gramian diag(+1s then -1s)
    std::vector<int> comp_signs;
};

/// Gram-Schmidt with pivoting on the largest |self-inner-product|; when all
/// self-products are small relative to the cross products, first mixes in
/// the strongest hyperbolic partner to create a non-isotropic pivot.
std::pair<std::vector<QMatrix>, std::vector<int>> signed_orthonormalize(
    std::vector<QMatrix> vecs, const HForm& h, const Tolerance& tol) {
    std::vector<QMatrix> out;
    std::vector<int> signs;
    const QMatrix& hm = h.matrix();
    size_t guard = 0;
    const size_t max_iter = 4 * vecs.size() + 8;
    while (!vecs.empty()) {
        if (++guard > max_iter)
            throw AmbiguityError("signed_orthonormalize: pivoting did not converge");
        for (auto& v : vecs) {
            const double n = v.norm();
            if (n <= tol.rank_tol)
                throw AmbiguityError("signed_orthonormalize: vector collapsed during deflation");
            v = v * (1.0 / n);
        }
        size_t best = 0;
        double best_self = -1.0;
        for (size_t i = 0; i < vecs.size(); ++i) {
            const double s = std::abs(ip(vecs[i], vecs[i], hm).real());
            if (s > best_self) {
                best_self = s;
                best = i;
            }
        }
        double best_cross = 0.0;
        size_t ci = 0, cj = 0;
        for (size_t i = 0; i < vecs.size(); ++i)
            for (size_t j = i + 1; j < vecs.size(); ++j) {
                const double cval = ip(vecs[i], vecs[j], hm).abs();
                if (cval > best_cross) {
                    best_cross = cval;
                    ci = i;
                    cj = j;
                }
            }
        if (best_self < 0.5 * best_cross) {
            // [v_i + v_j c, v_i + v_j c] = [v_i,v_i] + c*[v_j,v_j]c + 2|c|^2
            // with c = [v_i, v_j], so the mixed vector is non-isotropic.
            const Quaternion c = ip(vecs[ci], vecs[cj], hm);
            vecs[ci] = vecs[ci] + vecs[cj].scaled_right(c);
            continue;
        }
        if (best_self <= tol.rank_tol)
            throw AmbiguityError("signed_orthonormalize: space is numerically degenerate");
        QMatrix v = vecs[best];
        vecs.erase(vecs.begin() + static_cast<std::ptrdiff_t>(best));
        const double s = ip(v, v, hm).real();
        const int sign = s > 0 ? 1 : -1;
        v = v * (1.0 / std::sqrt(std::abs(s)));
        for (auto& u : vecs) u = u - v.scaled_right(ip(u, v, hm) * static_cast<double>(sign));
        out.push_back(v);
        signs.push_back(sign);
    }
    // Order +1 vectors before -1 vectors.
    std::vector<QMatrix> ordered;
    std::vector<int> ordered_signs;
    for (int want : {1, -1})
        for (size_t i = 0; i < out.size(); ++i)
            if (signs[i] == want) {
                ordered.push_back(out[i]);
                ordered_signs.push_back(want);
            }
    return {ordered, ordered_signs};
}

SideBasis build_side(const QMatrix& em, const HForm& h, const GramProfile& prof,
                     const Tolerance& tol) {
    const Eigen::Index n = h.dim();
    const Eigen::Index m = em.cols();
    const Eigen::Index m0 = prof.m0;
    SideBasis side;
    side.em = em;
    side.dual = QMatrix(n, m0);
    if (m0 > 0) {
        // [dual_j, em_i] = delta_ij  <=>  (em* H) dual = [I_{m0}; 0].
        const QMatrix rows = conj_transpose(em) * h.matrix();
        QMatrix rhs(m, m0);
        for (Eigen::Index i = 0; i < m0; ++i) rhs.set(i, i, Quaternion(1.0));
        QMatrix dual = qsolve_minnorm(rows, rhs);
        if ((rows * dual - rhs).norm() > tol.residual_tol * (1.0 + rhs.norm()))
            throw AmbiguityError("build_side: dual system is numerically inconsistent");
        // Make the duals mutually isotropic: dual_j += sum_k e_k gamma_kj
        // with gamma = -1/2 (dual* H dual) cancels every [dual_j, dual_l]
        // while preserving [dual_j, e_i] (the isotropic e_k are mutually
        // orthogonal to the whole normalized basis).
        const QMatrix gram = conj_transpose(dual) * (h.matrix() * dual);
        dual = dual + em.block(0, 0, n, m0) * (gram * (-0.5));
        side.dual = dual;
    }
    std::vector<QMatrix> w_basis = split_cols(em);
    for (Eigen::Index j = 0; j < m0; ++j) w_basis.push_back(side.dual.col(j));
    std::vector<QMatrix> comp_raw =
        w_basis.empty() ? split_cols(QMatrix::Identity(n)) : orthogonal_companion(w_basis, h, tol);
    if (static_cast<Eigen::Index>(comp_raw.size()) != n - m - m0)
        throw AmbiguityError("build_side: orthogonal companion has unexpected dimension");
    auto [comp, signs] = signed_orthonormalize(std::move(comp_raw), h, tol);
    side.comp = comp.empty() ? QMatrix(n, 0) : hcat(comp);
    side.comp_signs = std::move(signs);
    return side;
}

/// E = (e_1..e_m, dual_1..dual_m0, completion) as an n x n matrix.
QMatrix side_to_basis(const SideBasis& side) {
    const Eigen::Index n = side.em.rows();
    const Eigen::Index m = side.em.cols();
    const Eigen::Index m0 = side.dual.cols();
    QMatrix e(n, m + m0 + side.comp.cols());
    e.set_block(0, 0, side.em);
    e.set_block(0, m, side.dual);
    e.set_block(0, m + m0, side.comp);
    return e;
}

struct Extension {
    GramProfile prof;
    SideBasis dom;
    SideBasis img;
    QMatrix u;
};

Extension build_extension(const IsometryPairs& u0, const HForm& h1, const HForm& h2,
                          const Tolerance& tol) {
    tol.validate();
    const Eigen::Index n = h1.dim();
    if (h2.dim() != n)
        throw InvalidInputError("extend_isometry: spaces must have equal dimension");
    if (u0.basis.rows() != n || u0.images.rows() != n ||
        u0.basis.cols() != u0.images.cols())
        throw InvalidInputError("extend_isometry: pair shapes do not match the forms");
    if (h1.pi_plus() != h2.pi_plus() || h1.pi_minus() != h2.pi_minus()) {
        std::ostringstream os;
        os << "extend_isometry: signature mismatch, (" << h1.pi_plus() << "," << h1.pi_minus()
           << ") vs (" << h2.pi_plus() << "," << h2.pi_minus() << ")";
        throw NonexistenceError(os.str());
    }
    const Eigen::Index m = u0.basis.cols();
    if (m > 0 && qrank(u0.basis, tol) != m)
        throw InvalidInputError("extend_isometry: V1 basis is not linearly independent");
    if (m > 0 && qrank(u0.images, tol) != m)
        throw InvalidInputError("extend_isometry: U0 is singular on V1");
    const QMatrix g1 = conj_transpose(u0.basis) * (h1.matrix() * u0.basis);
    const QMatrix g2 = conj_transpose(u0.images) * (h2.matrix() * u0.images);
    const double iso_res = (g2 - g1).norm() / (1.0 + std::max(g1.norm(), g2.norm()));
    if (iso_res > tol.residual_tol)
        throw InvalidInputError("extend_isometry: U0 is not an isometry on V1");

    Extension ext;
    const Diagonalized diag = diagonalize_gram(u0.basis, h1, tol);
    ext.prof = diag.prof;
    ext.dom = build_side(u0.basis * diag.t, h1, diag.prof, tol);
    ext.img = build_side(u0.images * diag.t, h2, diag.prof, tol);
    if (ext.dom.comp_signs != ext.img.comp_signs)
        throw AmbiguityError("extend_isometry: completion signatures disagree");

    const QMatrix e = side_to_basis(ext.dom);
    const QMatrix f = side_to_basis(ext.img);
    ext.u = f * qinverse(e, tol);

    const double unitary_res = (conj_transpose(ext.u) * (h2.matrix() * ext.u) - h1.matrix()).norm();
    if (unitary_res > tol.residual_tol * h1.matrix().norm())
        throw AmbiguityError("extend_isometry: extension failed h-unitarity certification");
    const double restrict_res = (ext.u * u0.basis - u0.images).norm();
    if (restrict_res > tol.residual_tol * (1.0 + u0.images.norm()))
        throw AmbiguityError("extend_isometry: extension does not restrict to U0");
    return ext;
}

QMatrix arrow_gramian(const GramProfile& prof, const std::vector<int>& comp_signs) {
    const Eigen::Index m = prof.m();
    const Eigen::Index m0 = prof.m0;
    const Eigen::Index c = static_cast<Eigen::Index>(comp_signs.size());
    const Eigen::Index n = m + m0 + c;
    QMatrix g(n, n);
    for (Eigen::Index k = 0; k < m0; ++k) {
        g.set(k, m + k, Quaternion(1.0));
        g.set(m + k, k, Quaternion(1.0));
    }
    for (Eigen::Index i = 0; i < prof.m_plus; ++i) g.set(m0 + i, m0 + i, Quaternion(1.0));
    for (Eigen::Index i = 0; i < prof.m_minus; ++i) {
        const Eigen::Index p = m0 + prof.m_plus + i;
        g.set(p, p, Quaternion(-1.0));
    }
    for (Eigen::Index i = 0; i < c; ++i)
        g.set(m + m0 + i, m + m0 + i, Quaternion(static_cast<double>(comp_signs[i])));
    return g;
}

void certify_unitary(const QMatrix& u, const IsometryPairs& u0, const HForm& h1, const HForm& h2,
                     const Tolerance& tol, const char* who) {
    const double unitary_res = (conj_transpose(u) * (h2.matrix() * u) - h1.matrix()).norm();
    if (unitary_res > tol.residual_tol * h1.matrix().norm())
        throw AmbiguityError(std::string(who) + ": h-unitarity certification failed");
    const double restrict_res = (u * u0.basis - u0.images).norm();
    if (restrict_res > tol.residual_tol * (1.0 + u0.images.norm()))
        throw AmbiguityError(std::string(who) + ": result does not restrict to U0");
}

}  // namespace

IsometryPairs factor_isometry(const QMatrix& x, const QMatrix& y, const HForm& h1,
                              const HForm& h2, const Tolerance& tol) {
    tol.validate();
    if (x.cols() != h1.dim() || x.rows() != h2.dim() || y.rows() != x.rows() ||
        y.cols() != x.cols())
        throw InvalidInputError("factor_isometry: X, Y must both map the h1 space to the h2 space");
    const QMatrix gx = h_adjoint(x, h1, h2) * x;
    const QMatrix gy = h_adjoint(y, h1, h2) * y;
    const double gram_scale = 1.0 + std::max(gx.norm(), gy.norm());
    const double gram_res = (gy - gx).norm() / gram_scale;
    if (gram_res > tol.residual_tol) {
        std::ostringstream os;
        os << "factor_isometry: Y^[*]Y != X^[*]X, relative residual " << gram_res;
        throw GramMismatchError(os.str(), gram_res);
    }
    const SubspaceDecomposition sx = subspace_extract(x, tol);
    const SubspaceDecomposition sy = subspace_extract(y, tol);
    const Eigen::Index kx = static_cast<Eigen::Index>(sx.kernel_basis.size());
    const Eigen::Index ky = static_cast<Eigen::Index>(sy.kernel_basis.size());
    double ker_res = 0.0;
    if (ky > 0) ker_res = (x * hcat(sy.kernel_basis)).norm() / (1.0 + x.norm());
    if (kx > 0) ker_res = std::max(ker_res, (y * hcat(sx.kernel_basis)).norm() / (1.0 + y.norm()));
    if (kx != ky || ker_res > tol.residual_tol) {
        std::ostringstream os;
        os << "factor_isometry: Ker X != Ker Y (dims " << kx << " vs " << ky
           << ", cross residual " << ker_res << ")";
        throw KernelMismatchError(os.str(), kx, ky, ker_res);
    }
    IsometryPairs u0;
    u0.basis = sx.image_basis.empty() ? QMatrix(x.rows(), 0) : hcat(sx.image_basis);
    const QMatrix preimages = qsolve(x, u0.basis);
    u0.images = y * preimages;
    return u0;
}

std::pair<GramProfile, QMatrix> gram_profile(const std::vector<QMatrix>& v_basis, const HForm& h,
                                             const Tolerance& tol) {
    tol.validate();
    if (v_basis.empty()) return {GramProfile{}, QMatrix(h.dim(), 0)};
    const QMatrix basis = hcat(v_basis);
    if (basis.rows() != h.dim())
        throw InvalidInputError("gram_profile: vector dimension does not match the form");
    if (qrank(basis, tol) != basis.cols())
        throw InvalidInputError("gram_profile: vectors are not linearly independent");
    const Diagonalized diag = diagonalize_gram(basis, h, tol);
    return {diag.prof, basis * diag.t};
}

QMatrix extend_isometry(const IsometryPairs& u0, const HForm& h1, const HForm& h2,
                        const Tolerance& tol) {
    return build_extension(u0, h1, h2, tol).u;
}

WittBasis witt_basis(const IsometryPairs& u0, const HForm& h1, const HForm& h2,
                     const Tolerance& tol) {
    const Extension ext = build_extension(u0, h1, h2, tol);
    WittBasis basis;
    basis.e = side_to_basis(ext.dom);
    basis.f = side_to_basis(ext.img);
    basis.profile = ext.prof;
    basis.gramian = arrow_gramian(ext.prof, ext.dom.comp_signs);
    const double ge = (conj_transpose(basis.e) * (h1.matrix() * basis.e) - basis.gramian).norm();
    const double gf = (conj_transpose(basis.f) * (h2.matrix() * basis.f) - basis.gramian).norm();
    if (std::max(ge, gf) > tol.residual_tol * (1.0 + basis.gramian.norm()))
        throw AmbiguityError("witt_basis: basis Gramian deviates from the block form");
    return basis;
}

QMatrix witt_from_params(const IsometryPairs& u0, const WittBasis& basis, const WittParams& params,
                         const HForm& h1, const HForm& h2, const Tolerance& tol) {
    tol.validate();
    const Eigen::Index n = basis.e.rows();
    const Eigen::Index m0 = basis.profile.m0;
    const Eigen::Index m = basis.profile.m();
    const Eigen::Index c = n - m - m0;
    if (basis.e.cols() != n || basis.f.cols() != n || c < 0)
        throw InvalidInputError("witt_from_params: basis is not a full ordered basis");
    if (params.p1.rows() != c || params.p1.cols() != c || params.p2.rows() != c ||
        params.p2.cols() != m0 || params.p3.rows() != m0 || params.p3.cols() != m0)
        throw InvalidInputError("witt_from_params: parameter block shapes do not match");
    const QMatrix j2 = basis.gramian.block(m + m0, m + m0, c, c);
    const double p1_res = (conj_transpose(params.p1) * (j2 * params.p1) - j2).norm();
    if (p1_res > tol.residual_tol * (1.0 + j2.norm()) * (1.0 + params.p1.norm() * params.p1.norm()))
        throw InvalidInputError("witt_from_params: P1 is not J2-unitary");
    const double p3_res = (params.p3 + conj_transpose(params.p3)).norm();
    if (p3_res > tol.residual_tol * (1.0 + params.p3.norm()))
        throw InvalidInputError("witt_from_params: P3 is not skew-Hermitian");

    // Block triangular extension in the E/F bases; column/row partition is
    // (m0 isotropic e's | m - m0 signed e's | m0 duals | completion).
    QMatrix ut = QMatrix::Identity(n);
    if (m0 > 0) {
        ut.set_block(0, m, conj_transpose(params.p2) * (j2 * params.p2) * (-0.5) + params.p3);
        if (c > 0) {
            ut.set_block(0, m + m0, conj_transpose(params.p2) * (j2 * params.p1) * (-1.0));
            ut.set_block(m + m0, m, params.p2);
        }
    }
    if (c > 0) ut.set_block(m + m0, m + m0, params.p1);

    const QMatrix u = basis.f * (ut * qinverse(basis.e, tol));
    certify_unitary(u, u0, h1, h2, tol, "witt_from_params");
    return u;
}

}  // namespace qindef
