#include "qindef/sqroot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "qindef/indefinite.hpp"

namespace qindef {

namespace {

// ---------------------------------------------------------------------------
// Small local helpers.
// ---------------------------------------------------------------------------

/// [x, y] = y* H x for single columns, with H given as a plain matrix.
Quaternion ip(const QMatrix& x, const QMatrix& y, const QMatrix& h) {
    return (conj_transpose(y) * (h * x))(0, 0);
}

QMatrix vcat(const std::vector<QMatrix>& parts) {
    Eigen::Index rows = 0;
    for (const auto& p : parts) rows += p.rows();
    QMatrix out(rows, parts.empty() ? 0 : parts.front().cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.set_block(at, 0, p);
        at += p.rows();
    }
    return out;
}

QMatrix kernel_cols(const QMatrix& m, const Tolerance& tol) {
    const auto dec = subspace_extract(m, tol);
    if (dec.kernel_basis.empty()) return QMatrix(m.cols(), 0);
    return hcat(dec.kernel_basis);
}

/// Kernel basis with an absolute singular-value threshold. Used on the
/// well-scaled coefficient matrices of the kernel-target analysis, where a
/// row that is numerically zero must count as zero even though a relative
/// cutoff would call it full-rank.
QMatrix abs_kernel(const QMatrix& m, double thr) {
    const ComplexMatrix e = omega_embed(m);
    Eigen::JacobiSVD<ComplexMatrix> svd(e, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank_c = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thr) ++rank_c;
    const Eigen::Index ker_c = 2 * m.cols() - rank_c;
    if (ker_c <= 0) return QMatrix(m.cols(), 0);
    const ComplexMatrix kc = svd.matrixV().rightCols(ker_c);
    const auto idx = structure_select(kc);
    std::vector<QMatrix> cols;
    for (const auto i : idx) cols.push_back(phi_pullback(kc.col(i)));
    if (cols.empty()) return QMatrix(m.cols(), 0);
    return orthonormal_span(hcat(cols));
}

enum class Cls { Zero, Negative, Positive, Nonreal };

Cls classify(const CanonicalBlock& b, const Tolerance& tol) {
    if (!b.is_real()) return Cls::Nonreal;
    if (std::abs(b.lambda.real()) <= tol.cluster_radius) return Cls::Zero;
    return b.lambda.real() < 0 ? Cls::Negative : Cls::Positive;
}

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

// ---------------------------------------------------------------------------
// Zero-block pairing search (exact cover of the zero blocks by merged pairs,
// even pairs, and 1x1 singletons, maximizing the number of covered blocks).
// ---------------------------------------------------------------------------

struct GroupSpec {
    ZeroGroup::Kind kind;
    Eigen::Index k = 1;  // size of the (larger) block
    int sign = 0;        // merged/singleton sign
};

using ZeroCounts = std::map<Eigen::Index, std::array<int, 2>>;  // k -> {#plus, #minus}

struct SearchBest {
    int uncovered = 0;
    std::vector<GroupSpec> groups;
    std::vector<std::pair<Eigen::Index, int>> leftover;  // (size, sign)
};

std::string encode(const ZeroCounts& c) {
    std::ostringstream os;
    for (const auto& [k, v] : c)
        if (v[0] > 0 || v[1] > 0) os << k << ':' << v[0] << ',' << v[1] << ';';
    return os.str();
}

SearchBest zero_search(ZeroCounts& cnt, std::map<std::string, SearchBest>& memo) {
    Eigen::Index k = -1;
    for (const auto& [kk, v] : cnt)
        if (v[0] > 0 || v[1] > 0) k = std::max(k, kk);
    if (k < 0) return {};
    const std::string key = encode(cnt);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;

    const int si = cnt[k][0] > 0 ? 0 : 1;
    const int sign = si == 0 ? 1 : -1;
    SearchBest best;
    best.uncovered = -1;

    auto consider = [&](const SearchBest& cand) {
        if (best.uncovered < 0 || cand.uncovered < best.uncovered) best = cand;
    };

    cnt[k][si] -= 1;
    if (k >= 2 && cnt.count(k - 1) && cnt[k - 1][si] > 0) {
        cnt[k - 1][si] -= 1;
        SearchBest sub = zero_search(cnt, memo);
        cnt[k - 1][si] += 1;
        sub.groups.push_back({ZeroGroup::Kind::Merged, k, sign});
        consider(sub);
    }
    if (cnt[k][1 - si] > 0) {
        cnt[k][1 - si] -= 1;
        SearchBest sub = zero_search(cnt, memo);
        cnt[k][1 - si] += 1;
        sub.groups.push_back({ZeroGroup::Kind::Even, k, 0});
        consider(sub);
    }
    if (k == 1) {
        SearchBest sub = zero_search(cnt, memo);
        sub.groups.push_back({ZeroGroup::Kind::Singleton, 1, sign});
        consider(sub);
    }
    if (best.uncovered != 0) {  // dropping the block can never win otherwise
        SearchBest sub = zero_search(cnt, memo);
        sub.uncovered += 1;
        sub.leftover.emplace_back(k, sign);
        consider(sub);
    }
    cnt[k][si] += 1;

    memo[key] = best;
    return best;
}

// ---------------------------------------------------------------------------
// Per-class local square roots in canonical coordinates.
// ---------------------------------------------------------------------------

/// Taylor coefficients of sqrt at lambda: c_m = binom(1/2, m) lambda^{1/2-m}.
std::vector<std::complex<double>> sqrt_taylor(std::complex<double> lambda, Eigen::Index k) {
    std::vector<std::complex<double>> c(static_cast<size_t>(k));
    c[0] = std::sqrt(lambda);
    for (Eigen::Index m = 1; m < k; ++m)
        c[m] = c[m - 1] * ((1.5 / double(m) - 1.0) / lambda);
    return c;
}

/// Principal square root of J_k(lambda): upper-triangular Toeplitz, so its
/// square reproduces J_k(lambda) exactly (the Cauchy products of the sqrt
/// series telescope to lambda, 1, 0, 0, ...).
ComplexMatrix toeplitz_sqrt(std::complex<double> lambda, Eigen::Index k) {
    const auto c = sqrt_taylor(lambda, k);
    ComplexMatrix t = ComplexMatrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j) t(i, j) = c[j - i];
    return t;
}

/// Root of the nonreal pair (J_k(lambda) + J_k(conj), Q_{2k}): the principal
/// root applied to each half; diag(T, conj T) is Q_{2k}-selfadjoint for any
/// upper-triangular Toeplitz T.
QMatrix nonreal_root(std::complex<double> lambda, Eigen::Index k) {
    const ComplexMatrix t = toeplitz_sqrt(lambda, k);
    ComplexMatrix m = ComplexMatrix::Zero(2 * k, 2 * k);
    m.topLeftCorner(k, k) = t;
    m.bottomRightCorner(k, k) = t.conjugate();
    return QMatrix::FromComplex(m);
}

/// Root of the negative pair (J_k(lambda) + J_k(lambda), Q_k + -Q_k),
/// lambda < 0. The root has the nonreal canonical pair (J_k(mu) + J_k(conj),
/// Q_{2k}), mu = i sqrt(|lambda|); squaring it and recovering the canonical
/// basis of the square conjugates the root into the given coordinates.
QMatrix negative_pair_root(double lambda, Eigen::Index k, const Tolerance& tol) {
    const double r = std::sqrt(-lambda);
    if (k == 1) {
        QMatrix a(2, 2);
        a.set(0, 1, Quaternion(r));
        a.set(1, 0, Quaternion(-r));
        return a;
    }
    const std::complex<double> mu(0.0, r);
    ComplexMatrix m = ComplexMatrix::Zero(2 * k, 2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
        m(i, i) = mu;
        m(k + i, k + i) = std::conj(mu);
        if (i + 1 < k) {
            m(i, i + 1) = 1.0;
            m(k + i, k + i + 1) = 1.0;
        }
    }
    const QMatrix a_mu = QMatrix::FromComplex(m);
    const auto cf = canonical_form(a_mu * a_mu, HForm(sip(2 * k), tol), tol);
    // blocks sort to (lambda, k, +1), (lambda, k, -1), matching Q_k + -Q_k
    const QMatrix t = cf.S;
    return qinverse(t, tol) * a_mu * t;
}

// ---------------------------------------------------------------------------
// Zero-part coordinates and kernel-target analysis.
// ---------------------------------------------------------------------------

struct ZeroLocal {
    std::vector<size_t> block_ids;     // indices into form.blocks, layout order
    std::vector<Eigen::Index> sizes;   // chain lengths k_i
    std::vector<int> signs;            // eta_i
    std::vector<Eigen::Index> off;     // local offset of chain i
    Eigen::Index dim = 0;              // total zero order
    QMatrix j, h;                      // exact (J, H) of the zero part
    QMatrix s_cols;                    // n x dim columns of S spanning it
};

ZeroLocal zero_local(const CanonicalForm& form, const Tolerance& tol) {
    ZeroLocal z;
    const auto offs = column_offsets(form.blocks);
    for (const size_t i : layout_order(form.blocks)) {
        if (classify(form.blocks[i], tol) != Cls::Zero) continue;
        z.block_ids.push_back(i);
        z.sizes.push_back(form.blocks[i].size);
        z.signs.push_back(form.blocks[i].sign);
        z.off.push_back(z.dim);
        z.dim += form.blocks[i].size;
    }
    z.j = QMatrix(z.dim, z.dim);
    z.h = QMatrix(z.dim, z.dim);
    z.s_cols = QMatrix(form.S.rows(), z.dim);
    for (size_t i = 0; i < z.block_ids.size(); ++i) {
        const Eigen::Index k = z.sizes[i];
        z.j.set_block(z.off[i], z.off[i], jordan_block(0.0, k));
        z.h.set_block(z.off[i], z.off[i], double(z.signs[i]) * sip(k));
        z.s_cols.set_block(0, z.off[i],
                           form.S.block(0, offs[z.block_ids[i]], form.S.rows(), k));
    }
    return z;
}

/// One zero group together with the kernel direction it must realize.
struct TargetGroup {
    ZeroGroup::Kind kind;
    Eigen::Index k;  // larger chain length
    int sign;        // merged/singleton eta
    QMatrix u;       // target kernel direction, zero-local coordinates
};

struct ZeroAnalysis {
    bool ok = false;
    std::string witness;
    std::vector<TargetGroup> groups;  // sorted by depth descending
};

/// Decide whether the target kernel (orthonormal columns kz, zero-local
/// coordinates, contained in Ker J) is realizable, by reading off the group
/// structure it forces: at flag depth p the induced Hermitian form
/// F_p(u, v) = [lift, v] must have exactly as many +/-/0 directions as the
/// available blocks can supply.
ZeroAnalysis analyze_zero_targets(const ZeroLocal& z, const QMatrix& kz, const Tolerance& tol) {
    ZeroAnalysis res;
    const Eigen::Index t = kz.cols();
    const auto g = static_cast<Eigen::Index>(z.sizes.size());

    // Coefficients of each target over the chain tops; rows below a top must
    // vanish for the target to sit in Ker J.
    QMatrix ctop(g, t);
    double off_top = 0.0;
    for (Eigen::Index c = 0; c < t; ++c)
        for (Eigen::Index i = 0; i < g; ++i)
            for (Eigen::Index r = 0; r < z.sizes[i]; ++r) {
                const Quaternion q = kz(z.off[i] + r, c);
                if (r == 0)
                    ctop.set(i, c, q);
                else
                    off_top = std::max(off_top, q.abs());
            }
    if (off_top > 1e-6) {
        res.witness = "kernel target leaves Ker B";
        return res;
    }
    Eigen::Index kmax = 0;
    for (const auto s : z.sizes) kmax = std::max(kmax, s);

    for (const double thr : {1e-10, 1e-8, 1e-6}) {
        std::vector<TargetGroup> groups;
        std::multiset<std::pair<Eigen::Index, int>> needed;
        bool good = true;
        QMatrix x_deeper(t, 0);  // X_{p+1}: coefficient space of deeper targets
        for (Eigen::Index p = kmax - 1; p >= 0 && good; --p) {
            // K_p = targets supported on chains of length > p.
            std::vector<Eigen::Index> short_rows;
            for (Eigen::Index i = 0; i < g; ++i)
                if (z.sizes[i] <= p) short_rows.push_back(i);
            QMatrix xp;
            if (short_rows.empty()) {
                xp = QMatrix::Identity(t);
            } else {
                QMatrix sub(static_cast<Eigen::Index>(short_rows.size()), t);
                for (size_t r = 0; r < short_rows.size(); ++r)
                    for (Eigen::Index c = 0; c < t; ++c)
                        sub.set(static_cast<Eigen::Index>(r), c, ctop(short_rows[r], c));
                xp = abs_kernel(sub, thr);
            }
            const Eigen::Index dp = xp.cols();
            // F_p in coefficient space: only chains of length exactly p+1
            // contribute, with weight eta.
            QMatrix dpm(g, g);
            for (Eigen::Index i = 0; i < g; ++i)
                if (z.sizes[i] == p + 1) dpm.set(i, i, Quaternion(double(z.signs[i])));
            QMatrix cx = ctop * xp;
            QMatrix mp = conj_transpose(cx) * dpm * cx;
            mp = 0.5 * (mp + conj_transpose(mp));
            Eigen::VectorXd evals;
            QMatrix evecs;
            if (dp > 0) hermitian_eig(mp, evals, evecs);
            std::vector<Eigen::Index> zero_idx;
            for (Eigen::Index i = 0; i < dp; ++i) {
                if (std::abs(evals(i)) <= thr) {
                    zero_idx.push_back(i);
                    continue;
                }
                const int sgn = evals(i) > 0 ? 1 : -1;
                TargetGroup tg;
                tg.kind = p == 0 ? ZeroGroup::Kind::Singleton : ZeroGroup::Kind::Merged;
                tg.k = p + 1;
                tg.sign = sgn;
                QMatrix coef = xp * evecs.block(0, i, dp, 1);
                tg.u = kz * coef;
                tg.u = tg.u * (1.0 / tg.u.norm());
                groups.push_back(tg);
                needed.insert({p + 1, sgn});
                if (p >= 1) needed.insert({p, sgn});
            }
            const Eigen::Index n_even =
                static_cast<Eigen::Index>(zero_idx.size()) - x_deeper.cols();
            if (n_even < 0) {
                good = false;
                break;
            }
            if (n_even > 0) {
                // even targets: zero-form directions not already explained by
                // deeper groups
                QMatrix zc(t, static_cast<Eigen::Index>(zero_idx.size()));
                for (size_t c = 0; c < zero_idx.size(); ++c)
                    zc.set_block(0, static_cast<Eigen::Index>(c),
                                 xp * evecs.block(0, zero_idx[c], dp, 1));
                QMatrix joined(t, x_deeper.cols() + zc.cols());
                joined.set_block(0, 0, x_deeper);
                joined.set_block(0, x_deeper.cols(), zc);
                const QMatrix span = orthonormal_span(joined, tol);
                if (span.cols() != x_deeper.cols() + n_even) {
                    good = false;
                    break;
                }
                for (Eigen::Index c = x_deeper.cols(); c < span.cols(); ++c) {
                    TargetGroup tg;
                    tg.kind = ZeroGroup::Kind::Even;
                    tg.k = p + 1;
                    tg.sign = 0;
                    tg.u = kz * span.block(0, c, t, 1);
                    tg.u = tg.u * (1.0 / tg.u.norm());
                    groups.push_back(tg);
                    needed.insert({p + 1, 1});
                    needed.insert({p + 1, -1});
                }
            }
            x_deeper = xp;
        }
        if (!good) continue;
        std::multiset<std::pair<Eigen::Index, int>> have;
        for (Eigen::Index i = 0; i < g; ++i) have.insert({z.sizes[i], z.signs[i]});
        if (have != needed) continue;
        // depth descending; merged before even at equal depth
        std::stable_sort(groups.begin(), groups.end(),
                         [](const TargetGroup& a, const TargetGroup& b) {
                             if (a.k != b.k) return a.k > b.k;
                             return (a.kind == ZeroGroup::Kind::Even) <
                                    (b.kind == ZeroGroup::Kind::Even);
                         });
        res.ok = true;
        res.groups = std::move(groups);
        return res;
    }
    res.witness = "kernel target depth/sign profile does not match the zero blocks";
    return res;
}

// ---------------------------------------------------------------------------
// Steered construction of the zero-part columns.
// ---------------------------------------------------------------------------

/// Build columns V (dim x dim) in zero-local coordinates such that the zero
/// part of the root is V J_groups V^{-1}: each group contributes a Jordan
/// chain of the root whose alternate members form exact J-chains, the Gram of
/// each group's columns is eta Q (merged) or Q (even), and the chain tops hit
/// the prescribed kernel directions.
QMatrix steer_zero_columns(const ZeroLocal& z, const std::vector<TargetGroup>& groups,
                           const Tolerance& tol, std::vector<Eigen::Index>& root_sizes) {
    const Eigen::Index m = z.dim;
    Eigen::Index kmax = 0;
    for (const auto s : z.sizes) kmax = std::max(kmax, s);
    std::vector<QMatrix> jp(static_cast<size_t>(2 * kmax + 1));
    jp[0] = QMatrix::Identity(m);
    for (size_t i = 1; i < jp.size(); ++i) jp[i] = z.j * jp[i - 1];

    auto moment = [&](const QMatrix& x, const QMatrix& y, Eigen::Index r) {
        return ip(jp[static_cast<size_t>(r)] * x, y, z.h);
    };

    std::vector<QMatrix> emitted;  // all columns produced so far
    std::vector<QMatrix> group_cols;
    root_sizes.clear();

    for (size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& tg = groups[gi];
        // Orthogonality constraints: previously emitted chains (J-invariant
        // spans) and the kernel targets of the groups still to come.
        std::vector<QMatrix> cvecs = emitted;
        for (size_t gj = gi + 1; gj < groups.size(); ++gj) cvecs.push_back(groups[gj].u);
        QMatrix crows(0, m);
        if (!cvecs.empty()) crows = conj_transpose(z.h * hcat(cvecs));

        const Eigen::Index a = tg.k - 1;  // flag depth of the group's kernel
        QMatrix cols;

        if (tg.kind != ZeroGroup::Kind::Even) {
            // Chain generator y: J^a y = u under the orthogonality rows.
            const QMatrix sys = vcat({jp[static_cast<size_t>(a)], crows});
            QMatrix rhs(sys.rows(), 1);
            rhs.set_block(0, 0, tg.u);
            QMatrix y = qsolve_minnorm(sys, rhs);
            if ((sys * y - rhs).norm() > 1e-6 * (1.0 + tg.u.norm()))
                throw AmbiguityError("sqrt_build: kernel target is not reachable at its depth");
            const Quaternion f = moment(y, y, a);
            if (f.abs() < 1e-14 || (f.x0 > 0 ? 1 : -1) != tg.sign)
                throw AmbiguityError("sqrt_build: target direction has the wrong sign");
            y = y * (1.0 / std::sqrt(f.abs()));
            for (Eigen::Index r = a - 1; r >= 0; --r) {
                const double mr = moment(y, y, r).x0;
                y = y + (jp[static_cast<size_t>(a - r)] * y) * (-mr / (2.0 * tg.sign));
            }
            std::vector<QMatrix> ychain;  // J^r y, r = 0..a
            for (Eigen::Index r = 0; r <= a; ++r)
                ychain.push_back(jp[static_cast<size_t>(r)] * y);

            QMatrix zc(m, 0);
            if (a >= 1) {
                // Partner chain of length a: in Ker J^a, orthogonal to
                // everything above and to the whole y-chain.
                const QMatrix zsys = vcat(
                    {jp[static_cast<size_t>(a)], crows, conj_transpose(z.h * hcat(ychain))});
                const QMatrix nsp = kernel_cols(zsys, tol);
                if (nsp.cols() == 0)
                    throw AmbiguityError("sqrt_build: no partner chain for a merged pair");
                QMatrix fm = conj_transpose(nsp) * z.h * (jp[static_cast<size_t>(a - 1)] * nsp);
                fm = 0.5 * (fm + conj_transpose(fm));
                Eigen::VectorXd evals;
                QMatrix evecs;
                hermitian_eig(fm, evals, evecs);
                Eigen::Index pick = -1;
                for (Eigen::Index i = 0; i < evals.size(); ++i)
                    if (tg.sign * evals(i) > 0 &&
                        (pick < 0 || std::abs(evals(i)) > std::abs(evals(pick))))
                        pick = i;
                if (pick < 0 || std::abs(evals(pick)) < 1e-14)
                    throw AmbiguityError("sqrt_build: degenerate partner form in a merged pair");
                zc = nsp * evecs.block(0, pick, nsp.cols(), 1);
                zc = zc * (1.0 / std::sqrt(std::abs(evals(pick))));
                for (Eigen::Index r = a - 2; r >= 0; --r) {
                    const double mr = moment(zc, zc, r).x0;
                    zc = zc + (jp[static_cast<size_t>(a - 1 - r)] * zc) *
                                  (-mr / (2.0 * tg.sign));
                }
            }
            cols = QMatrix(m, 2 * a + 1);
            for (Eigen::Index i = 1; i <= a + 1; ++i) {
                cols.set_block(0, 2 * (i - 1), jp[static_cast<size_t>(a + 1 - i)] * y);
                if (i <= a)
                    cols.set_block(0, 2 * i - 1, jp[static_cast<size_t>(a - i)] * zc);
            }
        } else {
            // Even pair: split the working space by the sign of the depth-p
            // form, route the target through the tops, and fold the +/- pair
            // into two interleaved isotropic chains.
            const Eigen::Index k = tg.k;
            QMatrix nsp = crows.rows() == 0 ? QMatrix::Identity(m) : kernel_cols(crows, tol);
            if (nsp.cols() == 0)
                throw AmbiguityError("sqrt_build: empty working space for an even pair");
            QMatrix fm = conj_transpose(nsp) * z.h * (jp[static_cast<size_t>(k - 1)] * nsp);
            fm = 0.5 * (fm + conj_transpose(fm));
            Eigen::VectorXd evals;
            QMatrix evecs;
            hermitian_eig(fm, evals, evecs);
            const QMatrix q = nsp * evecs;  // form-diagonal generators
            const QMatrix tops = jp[static_cast<size_t>(k - 1)] * q;
            const QMatrix gamma = qsolve_minnorm(tops, tg.u);
            if ((tops * gamma - tg.u).norm() > 1e-6 * (1.0 + tg.u.norm()))
                throw AmbiguityError("sqrt_build: even-pair target is not reachable");
            double emax = 0.0;
            for (Eigen::Index i = 0; i < evals.size(); ++i)
                emax = std::max(emax, std::abs(evals(i)));
            const double thr = 1e-8 * std::max(1.0, emax);
            QMatrix gsel_p(q.cols(), 1), gsel_m(q.cols(), 1);
            for (Eigen::Index i = 0; i < q.cols(); ++i) {
                if (evals(i) < -thr)
                    gsel_m.set(i, 0, gamma(i, 0));
                else
                    gsel_p.set(i, 0, gamma(i, 0));  // + part absorbs the radical
            }
            QMatrix gp = q * gsel_p;
            QMatrix gm = q * gsel_m;
            const double fpp = moment(gp, gp, k - 1).x0;
            const double fmm = moment(gm, gm, k - 1).x0;
            if (fpp <= 1e-14 || fmm >= -1e-14)
                throw AmbiguityError("sqrt_build: even-pair split is degenerate");
            gp = gp * (1.0 / std::sqrt(fpp));
            gm = gm * (1.0 / std::sqrt(-fmm));
            for (Eigen::Index r = k - 2; r >= 0; --r) {
                const double mr = moment(gp, gp, r).x0;
                gp = gp + (jp[static_cast<size_t>(k - 1 - r)] * gp) * (-mr / 2.0);
            }
            for (Eigen::Index r = k - 2; r >= 0; --r) {
                const Quaternion mu = moment(gm, gp, r);
                gm = gm - (jp[static_cast<size_t>(k - 1 - r)] * gp).scaled_right(mu);
            }
            for (Eigen::Index r = k - 2; r >= 0; --r) {
                const double mr = moment(gm, gm, r).x0;
                gm = gm + (jp[static_cast<size_t>(k - 1 - r)] * gm) * (mr / 2.0);
            }
            const double s2 = 1.0 / std::sqrt(2.0);
            const QMatrix yc = (gp + gm) * s2;
            const QMatrix zc = (gp - gm) * s2;
            cols = QMatrix(m, 2 * k);
            for (Eigen::Index i = 1; i <= k; ++i) {
                cols.set_block(0, 2 * (i - 1), jp[static_cast<size_t>(k - i)] * yc);
                cols.set_block(0, 2 * i - 1, jp[static_cast<size_t>(k - i)] * zc);
            }
        }
        for (Eigen::Index c = 0; c < cols.cols(); ++c) emitted.push_back(cols.col(c));
        group_cols.push_back(cols);
        root_sizes.push_back(cols.cols());
    }
    return group_cols.empty() ? QMatrix(m, 0) : hcat(group_cols);
}

/// Standard zero-part columns for a fixed pairing (no kernel steering):
/// interleaved unit vectors for merged pairs, (e_i +- e'_i)/sqrt(2) for even
/// pairs.
QMatrix standard_zero_columns(const ZeroLocal& z, const CanonicalForm& form,
                              const std::vector<ZeroGroup>& groups,
                              std::vector<Eigen::Index>& root_sizes) {
    std::map<size_t, size_t> local_pos;
    for (size_t i = 0; i < z.block_ids.size(); ++i) local_pos[z.block_ids[i]] = i;
    auto unit = [&](size_t chain, Eigen::Index r) {
        QMatrix e(z.dim, 1);
        e.set(z.off[chain] + r, 0, Quaternion(1.0));
        return e;
    };
    std::vector<QMatrix> group_cols;
    root_sizes.clear();
    for (const auto& gr : groups) {
        const size_t c1 = local_pos.at(gr.first);
        if (gr.kind == ZeroGroup::Kind::Singleton) {
            group_cols.push_back(unit(c1, 0));
            root_sizes.push_back(1);
            continue;
        }
        const size_t c2 = local_pos.at(gr.second);
        if (gr.kind == ZeroGroup::Kind::Merged) {
            const Eigen::Index a = form.blocks[gr.second].size;
            QMatrix cols(z.dim, 2 * a + 1);
            for (Eigen::Index i = 0; i <= a; ++i) {
                cols.set_block(0, 2 * i, unit(c1, i));
                if (i < a) cols.set_block(0, 2 * i + 1, unit(c2, i));
            }
            group_cols.push_back(cols);
            root_sizes.push_back(2 * a + 1);
        } else {
            const Eigen::Index k = form.blocks[gr.first].size;
            const double s2 = 1.0 / std::sqrt(2.0);
            QMatrix cols(z.dim, 2 * k);
            for (Eigen::Index i = 0; i < k; ++i) {
                cols.set_block(0, 2 * i, (unit(c1, i) + unit(c2, i)) * s2);
                cols.set_block(0, 2 * i + 1, (unit(c1, i) - unit(c2, i)) * s2);
            }
            group_cols.push_back(cols);
            root_sizes.push_back(2 * k);
        }
    }
    return group_cols.empty() ? QMatrix(z.dim, 0) : hcat(group_cols);
}

/// Target kernel mapped into zero-local coordinates (orthonormal columns),
/// or a failure witness.
struct LocalTarget {
    bool ok = false;
    std::string witness;
    QMatrix kz;
};

LocalTarget localize_target(const QMatrix& b, const CanonicalForm& form, const ZeroLocal& z,
                            const QMatrix& kernel_target, const Tolerance& tol) {
    LocalTarget out;
    const QMatrix kn = kernel_target.cols() > 0 ? orthonormal_span(kernel_target, tol)
                                                : QMatrix(b.rows(), 0);
    if (kn.cols() != kernel_target.cols()) {
        out.witness = "kernel target columns are linearly dependent";
        return out;
    }
    if (kn.cols() == 0) {
        out.ok = z.dim == 0;
        if (!out.ok) out.witness = "zero blocks force a nontrivial kernel";
        out.kz = QMatrix(z.dim, 0);
        return out;
    }
    if ((b * kn).norm() > 1e-6 * (1.0 + b.norm())) {
        out.witness = "kernel target is not contained in Ker B";
        return out;
    }
    const QMatrix kc = qsolve(form.S, kn);
    QMatrix kz(z.dim, kn.cols());
    double off_norm2 = kc.norm() * kc.norm();
    const auto offs = column_offsets(form.blocks);
    for (size_t i = 0; i < z.block_ids.size(); ++i) {
        const QMatrix part = kc.block(offs[z.block_ids[i]], 0, z.sizes[i], kn.cols());
        kz.set_block(z.off[i], 0, part);
        off_norm2 -= part.norm() * part.norm();
    }
    if (off_norm2 > 1e-12 * kc.norm() * kc.norm() + 1e-14) {
        out.witness = "kernel target has components outside the zero blocks";
        return out;
    }
    const QMatrix kzo = orthonormal_span(kz, tol);
    if (kzo.cols() != kn.cols()) {
        out.witness = "kernel target degenerates inside the zero blocks";
        return out;
    }
    out.ok = true;
    out.kz = kzo;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations.
// ---------------------------------------------------------------------------

SqrtReport sqrt_exists(const CanonicalForm& form, const Tolerance& tol) {
    tol.validate();
    SqrtReport rep;

    // negative blocks: (equal lambda, equal size, opposite sign) pairs
    std::vector<size_t> neg;
    for (size_t i = 0; i < form.blocks.size(); ++i)
        if (classify(form.blocks[i], tol) == Cls::Negative) neg.push_back(i);
    std::vector<char> used(form.blocks.size(), 0);
    for (const size_t i : neg) {
        if (used[i] || form.blocks[i].sign != 1) continue;
        for (const size_t j : neg) {
            if (used[j] || form.blocks[j].sign != -1) continue;
            if (form.blocks[j].size != form.blocks[i].size) continue;
            if (std::abs(form.blocks[j].lambda.real() - form.blocks[i].lambda.real()) >
                tol.cluster_radius)
                continue;
            used[i] = used[j] = 1;
            rep.negative_pairs.emplace_back(i, j);
            break;
        }
    }
    for (const size_t i : neg)
        if (!used[i]) rep.negative_violations.push_back(form.blocks[i]);

    // zero blocks: exact cover search over merged / even / singleton groups
    ZeroCounts counts;
    std::map<std::pair<Eigen::Index, int>, std::vector<size_t>> queues;
    for (size_t i = 0; i < form.blocks.size(); ++i) {
        if (classify(form.blocks[i], tol) != Cls::Zero) continue;
        const auto& bl = form.blocks[i];
        counts[bl.size][bl.sign > 0 ? 0 : 1] += 1;
        queues[{bl.size, bl.sign}].push_back(i);
    }
    std::map<std::string, SearchBest> memo;
    const SearchBest best = zero_search(counts, memo);
    for (const auto& spec : best.groups) {
        ZeroGroup zg;
        zg.kind = spec.kind;
        auto pop = [&](Eigen::Index k, int s) {
            auto& q = queues.at({k, s});
            const size_t idx = q.back();
            q.pop_back();
            return idx;
        };
        switch (spec.kind) {
            case ZeroGroup::Kind::Singleton:
                zg.first = zg.second = pop(1, spec.sign);
                break;
            case ZeroGroup::Kind::Merged:
                zg.first = pop(spec.k, spec.sign);
                zg.second = pop(spec.k - 1, spec.sign);
                break;
            case ZeroGroup::Kind::Even:
                zg.first = pop(spec.k, 1);
                zg.second = pop(spec.k, -1);
                break;
        }
        rep.zero_groups.push_back(zg);
    }
    for (const auto& [k, s] : best.leftover) {
        auto& q = queues.at({k, s});
        rep.zero_violations.push_back(form.blocks[q.back()]);
        q.pop_back();
    }

    rep.exists = rep.negative_violations.empty() && rep.zero_violations.empty();
    return rep;
}

KernelAlignment kernel_alignment_check(const QMatrix& b, const HForm& h,
                                       const CanonicalForm& form, const SqrtReport& rep,
                                       const QMatrix& kernel_target, const Tolerance& tol) {
    tol.validate();
    KernelAlignment out;
    if (!rep.exists) {
        out.witness = "no H-selfadjoint square root exists";
        return out;
    }
    (void)h;
    const ZeroLocal z = zero_local(form, tol);
    const LocalTarget lt = localize_target(b, form, z, kernel_target, tol);
    if (!lt.ok) {
        out.witness = lt.witness;
        return out;
    }
    if (z.dim == 0) {
        out.ok = true;
        return out;
    }
    const ZeroAnalysis an = analyze_zero_targets(z, lt.kz, tol);
    out.ok = an.ok;
    out.witness = an.witness;
    return out;
}

QMatrix sqrt_build(const QMatrix& b, const HForm& h, const Tolerance& tol,
                   const std::optional<QMatrix>& kernel_target) {
    tol.validate();
    const CanonicalForm form = canonical_form(b, h, tol);
    const SqrtReport rep = sqrt_exists(form, tol);
    if (!rep.exists) {
        std::ostringstream os;
        os << "sqrt_build: no H-selfadjoint square root: " << rep.negative_violations.size()
           << " unpaired negative block(s), " << rep.zero_violations.size()
           << " unpaired zero block(s)";
        throw NonexistenceError(os.str());
    }

    const Eigen::Index n = b.rows();
    const auto offs = column_offsets(form.blocks);
    const ZeroLocal z = zero_local(form, tol);

    std::vector<QMatrix> col_groups;
    std::vector<QMatrix> root_blocks;

    std::vector<char> in_pair(form.blocks.size(), 0);
    for (const auto& [ip_, im_] : rep.negative_pairs) in_pair[ip_] = in_pair[im_] = 1;

    for (const size_t i : layout_order(form.blocks)) {
        const auto& bl = form.blocks[i];
        switch (classify(bl, tol)) {
            case Cls::Positive:
                col_groups.push_back(form.S.block(0, offs[i], n, bl.size));
                root_blocks.push_back(QMatrix::FromComplex(
                    toeplitz_sqrt(bl.lambda.real(), bl.size)));
                break;
            case Cls::Nonreal:
                col_groups.push_back(form.S.block(0, offs[i], n, 2 * bl.size));
                root_blocks.push_back(nonreal_root(bl.lambda, bl.size));
                break;
            default:
                break;  // negatives and zeros are grouped below
        }
    }
    for (const auto& [iplus, iminus] : rep.negative_pairs) {
        const Eigen::Index k = form.blocks[iplus].size;
        QMatrix cols(n, 2 * k);
        cols.set_block(0, 0, form.S.block(0, offs[iplus], n, k));
        cols.set_block(0, k, form.S.block(0, offs[iminus], n, k));
        col_groups.push_back(cols);
        root_blocks.push_back(
            negative_pair_root(form.blocks[iplus].lambda.real(), k, tol));
    }

    QMatrix kn(n, 0);
    if (z.dim > 0 || kernel_target) {
        QMatrix v;
        std::vector<Eigen::Index> root_sizes;
        if (kernel_target) {
            const LocalTarget lt = localize_target(b, form, z, *kernel_target, tol);
            if (!lt.ok)
                throw NonexistenceError("sqrt_build: kernel target unachievable: " +
                                        lt.witness);
            kn = orthonormal_span(*kernel_target, tol);
            if (z.dim > 0) {
                const ZeroAnalysis an = analyze_zero_targets(z, lt.kz, tol);
                if (!an.ok)
                    throw NonexistenceError("sqrt_build: kernel target unachievable: " +
                                            an.witness);
                v = steer_zero_columns(z, an.groups, tol, root_sizes);
            }
        } else if (z.dim > 0) {
            v = standard_zero_columns(z, form, rep.zero_groups, root_sizes);
        }
        if (z.dim > 0) {
            const QMatrix zcols = z.s_cols * v;
            Eigen::Index at = 0;
            for (const Eigen::Index sz : root_sizes) {
                col_groups.push_back(zcols.block(0, at, n, sz));
                root_blocks.push_back(jordan_block(0.0, sz));
                at += sz;
            }
        }
    }

    QMatrix s_new(n, n), jhat(n, n);
    Eigen::Index at = 0;
    for (size_t g = 0; g < col_groups.size(); ++g) {
        s_new.set_block(0, at, col_groups[g]);
        jhat.set_block(at, at, root_blocks[g]);
        at += col_groups[g].cols();
    }
    if (at != n) throw AmbiguityError("sqrt_build: group sizes do not sum to n");
    const QMatrix a = s_new * jhat * qinverse(s_new, tol);

    const auto sa = is_h_selfadjoint(a, h, tol);
    if (!sa.ok)
        throw AmbiguityError("sqrt_build: residual certification failed (selfadjointness)");
    if ((a * a - b).norm() > tol.residual_tol * (1.0 + b.norm()))
        throw AmbiguityError("sqrt_build: residual certification failed (square)");
    if (kernel_target) {
        const auto dec = subspace_extract(a, tol);
        const auto kdim = static_cast<Eigen::Index>(dec.kernel_basis.size());
        bool ok = kdim == kn.cols();
        if (ok && kdim > 0) {
            QMatrix joined(n, 2 * kdim);
            joined.set_block(0, 0, kn);
            joined.set_block(0, kdim, hcat(dec.kernel_basis));
            ok = qrank(joined, tol) == kdim;
        }
        if (!ok)
            throw AmbiguityError("sqrt_build: residual certification failed (kernel match)");
    }
    return a;
}

}  // namespace qindef
