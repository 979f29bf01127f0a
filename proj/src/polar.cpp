#include "qindef/polar.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qindef/witt.hpp"

namespace qindef {

namespace {

/// Block indices in the column layout of CanonicalForm::S (real blocks first,
/// then nonreal, each in the sorted order of form.blocks).
std::vector<size_t> layout_order(const std::vector<CanonicalBlock>& blocks) {
    std::vector<size_t> order;
    for (int phase = 0; phase < 2; ++phase)
        for (size_t i = 0; i < blocks.size(); ++i)
            if ((phase == 0) == blocks[i].is_real()) order.push_back(i);
    return order;
}

/// Column offset of every block inside S (indexed by position in form.blocks).
std::vector<Eigen::Index> column_offsets(const std::vector<CanonicalBlock>& blocks) {
    std::vector<Eigen::Index> off(blocks.size(), 0);
    Eigen::Index at = 0;
    for (const size_t i : layout_order(blocks)) {
        off[i] = at;
        at += blocks[i].order();
    }
    return off;
}

QMatrix kernel_cols(const QMatrix& m, const Tolerance& tol) {
    const auto dec = subspace_extract(m, tol);
    if (dec.kernel_basis.empty()) return QMatrix(m.cols(), 0);
    return hcat(dec.kernel_basis);
}

}  // namespace

ZeroBlockBasis zero_block_basis(const CanonicalForm& form, const SqrtReport& rep,
                                const Tolerance& tol) {
    tol.validate();
    if (!rep.exists)
        throw InvalidInputError("zero_block_basis: the zero blocks do not pair up");
    const auto offs = column_offsets(form.blocks);
    const Eigen::Index n = form.S.rows();
    ZeroBlockBasis zb;
    std::vector<QMatrix> singles;
    for (const auto& zg : rep.zero_groups) {
        const auto& first = form.blocks[zg.first];
        if (zg.kind == ZeroGroup::Kind::Singleton) {
            singles.push_back(form.S.block(0, offs[zg.first], n, 1));
            zb.singleton_signs.push_back(first.sign);
            continue;
        }
        const auto& second = form.blocks[zg.second];
        ZeroBlockBasis::Block blk;
        blk.k = first.size;
        blk.even = zg.kind == ZeroGroup::Kind::Even;
        blk.sign = first.sign;
        blk.cols = QMatrix(n, first.size + second.size);
        blk.cols.set_block(0, 0, form.S.block(0, offs[zg.first], n, first.size));
        blk.cols.set_block(0, first.size, form.S.block(0, offs[zg.second], n, second.size));
        zb.blocks.push_back(blk);
    }
    zb.singletons = singles.empty() ? QMatrix(n, 0) : hcat(singles);
    return zb;
}

PolarReport polar_exists(const QMatrix& x, const HForm& h, const Tolerance& tol) {
    tol.validate();
    if (x.rows() != x.cols() || x.rows() != h.dim())
        throw InvalidInputError("polar_exists: X must be square and match the form");
    PolarReport rep;
    const QMatrix b = h_adjoint(x, h) * x;
    rep.form = canonical_form(b, h, tol);
    const SqrtReport sq = sqrt_exists(rep.form, tol);
    rep.negative_violations = sq.negative_violations;
    rep.zero_violations = sq.zero_violations;
    rep.cond_i = sq.negative_violations.empty();
    rep.cond_ii = sq.zero_violations.empty();
    if (rep.cond_i && rep.cond_ii) {
        const QMatrix kx = kernel_cols(x, tol);
        const KernelAlignment ka = kernel_alignment_check(b, h, rep.form, sq, kx, tol);
        rep.cond_iii = ka.ok;
        rep.kernel_witness = ka.witness;
    } else {
        rep.kernel_witness = "not evaluated: earlier condition failed";
    }
    rep.exists = rep.cond_i && rep.cond_ii && rep.cond_iii;
    return rep;
}

PolarResiduals verify_polar(const QMatrix& x, const HForm& h, const QMatrix& u, const QMatrix& a,
                            const Tolerance& tol) {
    tol.validate();
    if (u.rows() != h.dim() || u.cols() != h.dim() || a.rows() != h.dim() ||
        a.cols() != h.dim() || x.rows() != h.dim() || x.cols() != h.dim())
        throw InvalidInputError("verify_polar: dimensions are inconsistent");
    PolarResiduals res;
    res.factor = (x - u * a).norm();
    res.unitarity = (conj_transpose(u) * (h.matrix() * u) - h.matrix()).norm();
    res.selfadjoint = (h.inverse() * (conj_transpose(a) * h.matrix()) - a).norm();
    const QMatrix kx = kernel_cols(x, tol);
    const QMatrix ka = kernel_cols(a, tol);
    res.kernel = 0.0;
    if (ka.cols() > 0) res.kernel = (x * ka).norm() / (1.0 + x.norm());
    if (kx.cols() > 0)
        res.kernel = std::max(res.kernel, (a * kx).norm() / (1.0 + a.norm()));
    res.kernel_match = kx.cols() == ka.cols() && res.kernel <= tol.residual_tol;
    res.ok = res.kernel_match && res.factor <= tol.residual_tol * (1.0 + x.norm()) &&
             res.unitarity <= tol.residual_tol * h.matrix().norm() &&
             res.selfadjoint <= tol.residual_tol * (1.0 + a.norm());
    return res;
}

PolarDecomposition polar_decompose(const QMatrix& x, const HForm& h, const Tolerance& tol) {
    tol.validate();
    const PolarReport rep = polar_exists(x, h, tol);
    if (!rep.exists) {
        std::ostringstream os;
        os << "polar_decompose: no H-polar decomposition exists (";
        if (!rep.cond_i) os << "unpaired negative blocks; ";
        if (!rep.cond_ii) os << "unpaired zero blocks; ";
        if (rep.cond_i && rep.cond_ii) os << rep.kernel_witness;
        os << ")";
        throw NonexistenceError(os.str());
    }
    const QMatrix b = h_adjoint(x, h) * x;
    const QMatrix kx = kernel_cols(x, tol);
    PolarDecomposition out;
    out.a = kx.cols() > 0 ? sqrt_build(b, h, tol, kx) : sqrt_build(b, h, tol);
    // X = U0 A is valid: A^[*] A = A^2 = X^[*] X and Ker A = Ker X.
    const IsometryPairs u0 = factor_isometry(out.a, x, h, h, tol);
    out.u = extend_isometry(u0, h, h, tol);
    out.residuals = verify_polar(x, h, out.u, out.a, tol);
    if (!out.residuals.ok)
        throw AmbiguityError("polar_decompose: residual certification failed");
    return out;
}

KernelCondition kernel_condition_check(const std::vector<QMatrix>& kerx_basis,
                                       const ZeroBlockBasis& zb, const HForm& h,
                                       const Tolerance& tol) {
    tol.validate();
    KernelCondition out;

    // Exact local model of the paired arrangement: nilpotent chains and the
    // canonical form pattern, plus the columns that realize it.
    Eigen::Index dim = 0;
    for (const auto& blk : zb.blocks) dim += blk.even ? 2 * blk.k : 2 * blk.k - 1;
    dim += zb.singletons.cols();
    QMatrix j_loc(dim, dim);
    QMatrix h_loc(dim, dim);
    QMatrix s_loc(h.dim(), dim);
    Eigen::Index at = 0;
    for (const auto& blk : zb.blocks) {
        const Eigen::Index k2 = blk.even ? blk.k : blk.k - 1;
        j_loc.set_block(at, at, jordan_block(0.0, blk.k));
        j_loc.set_block(at + blk.k, at + blk.k, jordan_block(0.0, k2));
        const double s1 = blk.even ? 1.0 : double(blk.sign);
        const double s2 = blk.even ? -1.0 : double(blk.sign);
        h_loc.set_block(at, at, s1 * sip(blk.k));
        h_loc.set_block(at + blk.k, at + blk.k, s2 * sip(k2));
        s_loc.set_block(0, at, blk.cols);
        at += blk.k + k2;
    }
    for (Eigen::Index i = 0; i < zb.singletons.cols(); ++i) {
        h_loc.set(at, at, Quaternion(double(zb.singleton_signs[static_cast<size_t>(i)])));
        s_loc.set_block(0, at, zb.singletons.block(0, i, h.dim(), 1));
        at += 1;
    }
    if (dim == 0) {
        out.ok = kerx_basis.empty();
        if (!out.ok) out.witness = "nonzero kernel but no zero blocks";
        return out;
    }
    const QMatrix gram = conj_transpose(s_loc) * (h.matrix() * s_loc);
    if ((gram - h_loc).norm() > 1e-6 * (1.0 + h_loc.norm())) {
        out.witness = "zero-block basis does not realize the canonical form pattern";
        return out;
    }

    // Express the kernel in local coordinates.
    QMatrix kz(dim, 0);
    if (!kerx_basis.empty()) {
        const QMatrix kx = hcat(kerx_basis);
        const QMatrix coords = qsolve(s_loc, kx);
        if ((s_loc * coords - kx).norm() > 1e-6 * (1.0 + kx.norm())) {
            out.witness = "kernel is not contained in the zero-block span";
            return out;
        }
        kz = orthonormal_span(coords, tol);
        if (kz.cols() != kx.cols()) {
            out.witness = "kernel degenerates in local coordinates";
            return out;
        }
    }

    // Alignment is decided on the exact local model through the square-root
    // achievable-kernel analysis.
    const HForm h_form(h_loc, tol);
    const CanonicalForm local_form = canonical_form(j_loc, h_form, tol);
    const SqrtReport local_rep = sqrt_exists(local_form, tol);
    const KernelAlignment ka =
        kernel_alignment_check(j_loc, h_form, local_form, local_rep, kz, tol);
    out.ok = ka.ok;
    out.witness = ka.witness;
    return out;
}

}  // namespace qindef
