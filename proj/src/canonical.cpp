#include "qindef/canonical.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace qindef {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// ---------------------------------------------------------------------------
// Schur reordering: move selected eigenvalues to the leading positions.
// ---------------------------------------------------------------------------

/// Swap the adjacent diagonal entries k, k+1 of the upper triangular T by a
/// unitary similarity, updating U accordingly.
void swap_adjacent(ComplexMatrix& t, ComplexMatrix& u, Eigen::Index k) {
    const std::complex<double> t11 = t(k, k), t12 = t(k, k + 1), t22 = t(k + 1, k + 1);
    // (t12, t22 - t11) is an eigenvector of the 2x2 block for eigenvalue t22.
    Eigen::Matrix2cd z;
    const double v0 = std::abs(t12), v1 = std::abs(t22 - t11);
    const double nv = std::hypot(v0, v1);
    if (nv <= 1e3 * kEps * (std::abs(t11) + std::abs(t22) + v0 + 1.0)) {
        z << 0, 1, 1, 0;
    } else {
        const std::complex<double> a = t12 / nv, b = (t22 - t11) / nv;
        z << a, -std::conj(b), b, std::conj(a);
    }
    t.middleRows(k, 2) = (z.adjoint() * t.middleRows(k, 2)).eval();
    t.middleCols(k, 2) = (t.middleCols(k, 2) * z).eval();
    u.middleCols(k, 2) = (u.middleCols(k, 2) * z).eval();
    t(k + 1, k) = 0.0;
}

/// Bubble all selected positions to the front, preserving relative order of
/// the unselected ones.
void reorder_to_front(ComplexMatrix& t, ComplexMatrix& u, std::vector<char>& sel) {
    const Eigen::Index n = t.rows();
    Eigen::Index front = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!sel[i]) continue;
        for (Eigen::Index k = i; k > front; --k) {
            swap_adjacent(t, u, k - 1);
            std::swap(sel[k - 1], sel[k]);
        }
        ++front;
    }
}

// ---------------------------------------------------------------------------
// Incremental orthonormal span of complex vectors.
// ---------------------------------------------------------------------------

struct CSpan {
    ComplexMatrix basis;
    Eigen::Index nb = 0;

    explicit CSpan(Eigen::Index dim, Eigen::Index cap) : basis(dim, cap) {}

    ComplexVector project_out(ComplexVector v) const {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < nb; ++i) v -= basis.col(i) * basis.col(i).dot(v);
        return v;
    }
    void add(const ComplexVector& v) {
        ComplexVector r = project_out(v);
        const double nr = r.norm();
        if (nr > 1e-14 * (1.0 + v.norm())) basis.col(nb++) = r / nr;
    }
};

// ---------------------------------------------------------------------------
// Per-eigenvalue-class data.
// ---------------------------------------------------------------------------

struct EigenClass {
    std::complex<double> lambda;  ///< refined representative, Im >= 0
    bool real = false;
    std::vector<Eigen::Index> members;  ///< positions in the Schur diagonal
};

struct ComplexChain {
    ComplexVector generator;  ///< full-space (2n) vector in Ker N^length
    Eigen::Index length = 0;
};

struct BlockColumns {
    CanonicalBlock block;
    QMatrix cols;  ///< n x order() canonical basis columns
};

/// Apply (M - lambda I) p times.
ComplexVector shift_pow(const ComplexMatrix& m, std::complex<double> lambda,
                        const ComplexVector& v, Eigen::Index p) {
    ComplexVector r = v;
    for (Eigen::Index i = 0; i < p; ++i) r = m * r - lambda * r;
    return r;
}

/// Conjugate-closed eigenvalue classes of the Schur diagonal at the given
/// absolute radius; values within the radius of the real axis become real.
std::vector<EigenClass> cluster_classes(const ComplexVector& diag, double radius) {
    const Eigen::Index n2 = diag.size();
    std::vector<std::complex<double>> folded(n2);
    for (Eigen::Index i = 0; i < n2; ++i)
        folded[i] = {diag(i).real(), std::abs(diag(i).imag())};

    std::vector<int> parent(n2);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (Eigen::Index i = 0; i < n2; ++i)
        for (Eigen::Index j = i + 1; j < n2; ++j)
            if (std::abs(folded[i] - folded[j]) <= radius) parent[find(i)] = find(j);

    std::vector<EigenClass> classes;
    std::vector<int> root_of(n2, -1);
    for (Eigen::Index i = 0; i < n2; ++i) {
        const int r = find(static_cast<int>(i));
        int slot = -1;
        for (size_t c = 0; c < classes.size(); ++c)
            if (root_of[c] == r) slot = static_cast<int>(c);
        if (slot < 0) {
            slot = static_cast<int>(classes.size());
            classes.push_back({});
            root_of[slot] = r;
        }
        classes[static_cast<size_t>(slot)].members.push_back(i);
    }
    for (auto& c : classes) {
        std::complex<double> mean = 0;
        for (auto i : c.members) mean += folded[i];
        mean /= static_cast<double>(c.members.size());
        if (mean.imag() <= radius) {
            c.real = true;
            c.lambda = {mean.real(), 0.0};
        } else {
            c.real = false;
            c.lambda = mean;
            // keep only the upper-half-plane copies; a lopsided split means
            // the cluster was not a genuine conjugate pair at this radius
            std::vector<Eigen::Index> upper;
            for (auto i : c.members)
                if (diag(i).imag() > 0) upper.push_back(i);
            if (2 * upper.size() != c.members.size())
                throw AmbiguityError(
                    "canonical_form: unbalanced conjugate cluster at this radius");
            c.members = upper;
        }
    }
    std::sort(classes.begin(), classes.end(), [](const EigenClass& a, const EigenClass& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
        return a.lambda.imag() < b.lambda.imag();
    });
    return classes;
}

/// Kernel dimensions of the powers of the (normalized) nilpotent part, by
/// thresholded SVD; kdims[p-1] = dim Ker N^p.
///
/// The diagonal scatter of a defective cluster is of order (eps*cond)^{1/k},
/// far above eps, but it cancels in the trace-refined lambda, so the noise
/// floor of the powers of N is eps-scale. The threshold is therefore an
/// eps-scale knob (retried by the caller and certified by residuals), not a
/// scatter-scale one.
std::vector<Eigen::Index> kernel_ladder(const ComplexMatrix& tc, std::complex<double> lambda,
                                        double anorm, double rank_thr,
                                        std::vector<ComplexMatrix>& kernels) {
    const Eigen::Index m = tc.rows();
    if (m == 0) throw AmbiguityError("canonical_form: empty eigenvalue class");
    ComplexMatrix n = tc - lambda * ComplexMatrix::Identity(m, m);
    const double nrm = n.norm();
    kernels.clear();
    std::vector<Eigen::Index> kdims;
    if (nrm <= 1e3 * m * kEps * (1.0 + std::abs(lambda) + anorm)) {
        // semisimple cluster: everything is kernel at the first power
        kdims.push_back(m);
        kernels.push_back(ComplexMatrix::Identity(m, m));
        return kdims;
    }
    const ComplexMatrix nh = n / nrm;
    ComplexMatrix p = ComplexMatrix::Identity(m, m);
    for (Eigen::Index q = 1; q <= m; ++q) {
        p = nh * p;
        Eigen::JacobiSVD<ComplexMatrix> svd(p, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        Eigen::Index rank = 0;
        const double thr = rank_thr * static_cast<double>(q);
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > thr) ++rank;
        kdims.push_back(m - rank);
        kernels.push_back(svd.matrixV().rightCols(m - rank));
        if (m - rank == m) break;
    }
    if (kdims.back() != m)
        throw AmbiguityError("canonical_form: nilpotent ladder does not exhaust the subspace");
    return kdims;
}

/// Choose chain generators from the kernel ladder; full-space vectors.
/// For real classes, each accepted generator also claims its structure-map
/// image, so the count per length is halved.
std::vector<ComplexChain> select_chains(const ComplexMatrix& m_full,
                                        std::complex<double> lambda, bool real,
                                        const ComplexMatrix& v_basis,
                                        const std::vector<Eigen::Index>& kdims,
                                        const std::vector<ComplexMatrix>& kernels) {
    const Eigen::Index q = static_cast<Eigen::Index>(kdims.size());
    const Eigen::Index dim = v_basis.rows();
    const Eigen::Index msub = v_basis.cols();
    auto weyr = [&](Eigen::Index p) -> Eigen::Index {  // dim Ker N^p - dim Ker N^{p-1}
        if (p < 1 || p > q) return 0;
        return kdims[p - 1] - (p >= 2 ? kdims[p - 2] : 0);
    };
    std::vector<ComplexChain> chains;
    for (Eigen::Index k = q; k >= 1; --k) {
        const Eigen::Index count = weyr(k) - weyr(k + 1);
        if (count < 0) throw AmbiguityError("canonical_form: non-monotone kernel ladder");
        Eigen::Index need = count;
        if (real) {
            if (count % 2 != 0)
                throw AmbiguityError("canonical_form: odd chain count in a real class");
            need = count / 2;
        }
        if (need == 0) continue;

        CSpan avoid(dim, 6 * msub + 4);
        if (k >= 2) {
            const ComplexMatrix prev = v_basis * kernels[k - 2];
            for (Eigen::Index j = 0; j < prev.cols(); ++j) avoid.add(prev.col(j));
        }
        for (const auto& c : chains) {
            const ComplexVector down = shift_pow(m_full, lambda, c.generator, c.length - k);
            avoid.add(down);
            if (real) avoid.add(structure_map(down));
        }
        const ComplexMatrix cand = v_basis * kernels[k - 1];
        for (Eigen::Index t = 0; t < need; ++t) {
            Eigen::Index best = -1;
            double best_res = -1.0;
            for (Eigen::Index j = 0; j < cand.cols(); ++j) {
                const double r = avoid.project_out(cand.col(j)).norm();
                if (r > best_res) {
                    best_res = r;
                    best = j;
                }
            }
            if (best < 0 || best_res <= 1e-10)
                throw AmbiguityError("canonical_form: chain generator selection failed");
            ComplexVector g = avoid.project_out(cand.col(best));
            g /= g.norm();
            chains.push_back({g, k});
            avoid.add(g);
            if (real) avoid.add(structure_map(g));
        }
    }
    return chains;
}

// ---------------------------------------------------------------------------
// Real-eigenvalue normalization (quaternion arithmetic).
// ---------------------------------------------------------------------------

struct QChain {
    QMatrix generator;  ///< n x 1
    Eigen::Index length = 0;
};

QMatrix bpow_apply(const QMatrix& b, QMatrix v, Eigen::Index p) {
    for (Eigen::Index i = 0; i < p; ++i) v = b * v;
    return v;
}

std::vector<BlockColumns> normalize_real_class(const QMatrix& a, const HForm& h, double lambda,
                                               std::vector<QChain> chains) {
    const Eigen::Index n = a.rows();
    const QMatrix b = a - QMatrix::Identity(n) * lambda;
    std::vector<BlockColumns> out;

    while (!chains.empty()) {
        Eigen::Index k = 0;
        for (const auto& c : chains) k = std::max(k, c.length);
        std::vector<size_t> tops;
        for (size_t i = 0; i < chains.size(); ++i)
            if (chains[i].length == k) tops.push_back(i);

        // Pick the generator (or two-chain combination) with the largest
        // normalized top moment f(x) = [B^{k-1} x, x].
        auto moment = [&](const QMatrix& x) {
            return inner_product(bpow_apply(b, x, k - 1), x, h);
        };
        auto score = [&](const QMatrix& x, const Quaternion& f) {
            const double denom =
                (1.0 + h.matrix().norm()) * bpow_apply(b, x, k - 1).norm() * x.norm() + 1e-300;
            return f.abs() / denom;
        };
        QMatrix best_x;
        double best_score = -1.0;
        size_t best_owner = 0;
        for (size_t ti = 0; ti < tops.size(); ++ti) {
            const QMatrix& x = chains[tops[ti]].generator;
            const Quaternion f = moment(x);
            const double s = score(x, f);
            if (s > best_score) {
                best_score = s;
                best_x = x;
                best_owner = tops[ti];
            }
            for (size_t tj = 0; tj < tops.size(); ++tj) {
                if (tj == ti) continue;
                const QMatrix& y = chains[tops[tj]].generator;
                const Quaternion c = inner_product(bpow_apply(b, x, k - 1), y, h);
                if (c.abs() <= 0) continue;
                const QMatrix cand = x + y.scaled_right(c / c.abs());
                const Quaternion fc = moment(cand);
                const double sc = score(cand, fc);
                if (sc > best_score) {
                    best_score = sc;
                    best_x = cand;
                    best_owner = tops[ti];
                }
            }
        }
        if (best_score <= 1e-8)
            throw AmbiguityError("canonical_form: degenerate top form in a real class");

        QMatrix x = best_x;
        Quaternion f = moment(x);
        const int eta = f.real() >= 0 ? 1 : -1;
        x = x * (1.0 / std::sqrt(std::abs(f.real())));
        // kill the lower moments: [B^m x, x] must vanish for m < k-1
        for (Eigen::Index m = k - 2; m >= 0; --m) {
            const double cm = inner_product(bpow_apply(b, x, m), x, h).real();
            x = x + bpow_apply(b, x, k - 1 - m) * (-cm / (2.0 * eta));
        }

        // emit the chain columns (B^{k-1}x, ..., Bx, x)
        QMatrix cols(n, k);
        QMatrix v = x;
        cols.set_col(k - 1, v);
        for (Eigen::Index t = k - 2; t >= 0; --t) {
            v = b * v;
            cols.set_col(t, v);
        }
        out.push_back({CanonicalBlock{{lambda, 0.0}, k, eta}, cols});

        // deflate the remaining chains against the emitted one
        chains.erase(chains.begin() + static_cast<std::ptrdiff_t>(best_owner));
        for (auto& c : chains) {
            for (Eigen::Index m = 0; m < c.length; ++m) {
                const Quaternion mu = inner_product(bpow_apply(b, c.generator, m), x, h);
                c.generator =
                    c.generator - bpow_apply(b, x, k - 1 - m).scaled_right(mu / double(eta));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Nonreal-eigenvalue normalization (complex arithmetic in the embedding).
// ---------------------------------------------------------------------------

std::vector<BlockColumns> normalize_nonreal_class(const ComplexMatrix& m_full,
                                                  const ComplexMatrix& g_full,
                                                  std::complex<double> lambda,
                                                  std::vector<ComplexChain> chains) {
    // Bilinear skew-symmetric form on the lambda root subspace; invariant
    // under N = M - lambda I, and identically zero on any single chain.
    auto form = [&](const ComplexVector& u, const ComplexVector& v) -> std::complex<double> {
        return (structure_map(v).adjoint() * g_full * u)(0);
    };
    std::vector<BlockColumns> out;

    while (!chains.empty()) {
        Eigen::Index k = 0;
        for (const auto& c : chains) k = std::max(k, c.length);
        std::vector<size_t> tops;
        for (size_t i = 0; i < chains.size(); ++i)
            if (chains[i].length == k) tops.push_back(i);
        if (tops.size() % 2 != 0)
            throw AmbiguityError("canonical_form: unpaired chain in a nonreal class");

        size_t bi = 0, bj = 0;
        double best = -1.0;
        for (size_t ti = 0; ti < tops.size(); ++ti)
            for (size_t tj = ti + 1; tj < tops.size(); ++tj) {
                const ComplexVector xk =
                    shift_pow(m_full, lambda, chains[tops[ti]].generator, k - 1);
                const double v = std::abs(form(xk, chains[tops[tj]].generator)) /
                                 (g_full.norm() * xk.norm() *
                                      chains[tops[tj]].generator.norm() +
                                  1e-300);
                if (v > best) {
                    best = v;
                    bi = tops[ti];
                    bj = tops[tj];
                }
            }
        if (best <= 1e-8)
            throw AmbiguityError("canonical_form: degenerate pairing in a nonreal class");

        const ComplexVector x = chains[bi].generator;
        ComplexVector y = chains[bj].generator;
        std::vector<ComplexVector> nx(k), ny(k);
        nx[0] = x;
        ny[0] = y;
        for (Eigen::Index p = 1; p < k; ++p) {
            nx[p] = m_full * nx[p - 1] - lambda * nx[p - 1];
            ny[p] = m_full * ny[p - 1] - lambda * ny[p - 1];
        }
        const std::complex<double> c = form(nx[k - 1], y);
        for (auto& v : ny) v /= c;

        // Toeplitz correction: make mu_m = F(N^m x, y') = delta_{m,k-1}.
        std::vector<std::complex<double>> mu(k);
        for (Eigen::Index m = 0; m < k; ++m) mu[m] = form(nx[m], ny[0]);
        std::vector<std::complex<double>> coef(k, 0.0);
        coef[0] = 1.0;
        for (Eigen::Index s = 1; s < k; ++s) {
            std::complex<double> acc = 0.0;
            for (Eigen::Index i = 0; i < s; ++i) acc += mu[k - 1 - s + i] * coef[i];
            coef[s] = -acc;
        }
        std::vector<ComplexVector> nyp(k);
        for (Eigen::Index p = 0; p < k; ++p) {
            nyp[p] = ComplexVector::Zero(x.size());
            for (Eigen::Index i = 0; p + i < k; ++i) nyp[p] += ny[p + i] * coef[i];
        }

        // columns: u_t = pullback(N^{k-t} x), w_t = pullback(C(N^{k-t} y'))
        const Eigen::Index n = x.size() / 2;
        QMatrix cols(n, 2 * k);
        for (Eigen::Index t = 1; t <= k; ++t) {
            cols.set_col(t - 1, phi_pullback(nx[k - t]));
            cols.set_col(k + t - 1, phi_pullback(structure_map(nyp[k - t])));
        }
        out.push_back({CanonicalBlock{lambda, k, 0}, cols});

        // deflate the remaining chains against the emitted pair
        const std::vector<ComplexVector> ypow = nyp;
        std::vector<size_t> keep;
        for (size_t i = 0; i < chains.size(); ++i)
            if (i != bi && i != bj) keep.push_back(i);
        std::vector<ComplexChain> next;
        for (size_t i : keep) {
            ComplexChain ch = chains[i];
            for (Eigen::Index m = 0; m < ch.length; ++m) {
                const ComplexVector zm = shift_pow(m_full, lambda, ch.generator, m);
                const std::complex<double> am = form(zm, ypow[0]);
                const std::complex<double> bm = -form(zm, nx[0]);
                ch.generator -= nx[k - 1 - m] * am + ypow[k - 1 - m] * bm;
            }
            next.push_back(ch);
        }
        chains = next;
    }
    return out;
}

// ---------------------------------------------------------------------------
// One full attempt at a given clustering radius.
// ---------------------------------------------------------------------------

CanonicalForm attempt(const QMatrix& a, const HForm& h, const Tolerance& tol, double radius_rel,
                      double rank_thr) {
    const Eigen::Index n = a.rows();
    const ComplexMatrix m_full = omega_embed(a);
    const ComplexMatrix g_full = omega_embed(h.matrix());

    Eigen::ComplexSchur<ComplexMatrix> schur(m_full);
    if (schur.info() != Eigen::Success)
        throw AmbiguityError("canonical_form: Schur decomposition failed");
    const ComplexMatrix t0 = schur.matrixT();
    const ComplexMatrix u0 = schur.matrixU();

    double scale = 0.0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) scale = std::max(scale, std::abs(t0(i, i)));
    const double radius = radius_rel * (1.0 + scale);
    const auto classes = cluster_classes(t0.diagonal(), radius);

    std::vector<BlockColumns> entries;
    for (const auto& cls : classes) {
        ComplexMatrix t = t0, u = u0;
        std::vector<char> sel(2 * n, 0);
        for (auto i : cls.members) sel[i] = 1;
        reorder_to_front(t, u, sel);
        const Eigen::Index m = static_cast<Eigen::Index>(cls.members.size());
        const ComplexMatrix v_basis = u.leftCols(m);
        const ComplexMatrix tc = t.topLeftCorner(m, m);
        const std::complex<double> lam = cls.real
                                             ? std::complex<double>(tc.trace().real() / m, 0.0)
                                             : std::complex<double>(tc.trace() / double(m));

        std::vector<ComplexMatrix> kernels;
        const auto kdims = kernel_ladder(tc, lam, a.norm(), rank_thr, kernels);
        auto chains = select_chains(m_full, lam, cls.real, v_basis, kdims, kernels);

        std::vector<BlockColumns> blocks;
        if (cls.real) {
            std::vector<QChain> qchains;
            for (const auto& c : chains) qchains.push_back({phi_pullback(c.generator), c.length});
            blocks = normalize_real_class(a, h, lam.real(), std::move(qchains));
        } else {
            blocks = normalize_nonreal_class(m_full, g_full, lam, std::move(chains));
        }
        for (auto& bl : blocks) entries.push_back(std::move(bl));
    }

    // canonical ordering: sort, then real entries first to match assemble()
    std::stable_sort(entries.begin(), entries.end(),
                     [](const BlockColumns& l, const BlockColumns& r) {
                         const auto& x = l.block;
                         const auto& y = r.block;
                         if (x.lambda.real() != y.lambda.real())
                             return x.lambda.real() < y.lambda.real();
                         if (x.lambda.imag() != y.lambda.imag())
                             return x.lambda.imag() < y.lambda.imag();
                         if (x.size != y.size) return x.size > y.size;
                         return x.sign > y.sign;
                     });
    CanonicalForm form;
    form.S = QMatrix(n, n);
    Eigen::Index at = 0;
    for (int phase = 0; phase < 2; ++phase)
        for (const auto& e : entries) {
            if ((phase == 0) != e.block.is_real()) continue;
            if (phase == 0) form.blocks.push_back(e.block);
            form.S.set_block(0, at, e.cols);
            at += e.cols.cols();
        }
    for (const auto& e : entries)
        if (!e.block.is_real()) form.blocks.push_back(e.block);
    std::vector<CanonicalBlock> sorted = form.blocks;
    sort_blocks(sorted);
    // keep the sorted list as the public block order
    form.blocks = sorted;
    if (at != n) throw AmbiguityError("canonical_form: block sizes do not sum to n");

    // But S was laid out real-first in entry order; rebuild blocks for the
    // residual check in the same layout.
    std::vector<CanonicalBlock> layout;
    for (int phase = 0; phase < 2; ++phase)
        for (const auto& e : entries)
            if ((phase == 0) == e.block.is_real()) layout.push_back(e.block);
    const auto [j, hc] = assemble(layout);

    form.residuals.similarity =
        (a * form.S - form.S * j).norm() / (form.S.norm() * (1.0 + a.norm()));
    form.residuals.congruence =
        (conj_transpose(form.S) * h.matrix() * form.S - hc).norm() /
        (form.S.norm() * form.S.norm() * h.matrix().norm());
    if (form.residuals.similarity > tol.residual_tol ||
        form.residuals.congruence > tol.residual_tol)
        throw AmbiguityError("canonical_form: residual certification failed");
    if (qrank(form.S, tol) != n)
        throw AmbiguityError("canonical_form: singular transform");
    return form;
}

}  // namespace

void sort_blocks(std::vector<CanonicalBlock>& blocks) {
    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const CanonicalBlock& x, const CanonicalBlock& y) {
                         if (x.lambda.real() != y.lambda.real())
                             return x.lambda.real() < y.lambda.real();
                         if (x.lambda.imag() != y.lambda.imag())
                             return x.lambda.imag() < y.lambda.imag();
                         if (x.size != y.size) return x.size > y.size;
                         return x.sign > y.sign;
                     });
}

std::pair<QMatrix, QMatrix> assemble(const std::vector<CanonicalBlock>& blocks) {
    Eigen::Index n = 0;
    for (const auto& b : blocks) {
        if (!b.is_real() && b.lambda.imag() < 0)
            throw InvalidInputError("assemble: nonreal eigenvalues must have Im > 0");
        if (b.is_real() && b.sign != 1 && b.sign != -1)
            throw InvalidInputError("assemble: real blocks need a sign of +1 or -1");
        n += b.order();
    }
    QMatrix j(n, n), hc(n, n);
    Eigen::Index at = 0;
    for (int phase = 0; phase < 2; ++phase)
        for (const auto& b : blocks) {
            if ((phase == 0) != b.is_real()) continue;
            if (b.is_real()) {
                j.set_block(at, at, jordan_block(b.lambda, b.size));
                hc.set_block(at, at, double(b.sign) * sip(b.size));
                at += b.size;
            } else {
                j.set_block(at, at, jordan_block(b.lambda, b.size));
                const QMatrix jbar =
                    QMatrix::FromComplex(omega_embed(jordan_block(b.lambda, b.size))
                                             .bottomRightCorner(b.size, b.size));
                j.set_block(at + b.size, at + b.size, jbar);
                hc.set_block(at, at, sip(2 * b.size));
                at += 2 * b.size;
            }
        }
    return {j, hc};
}

bool forms_equal(const CanonicalForm& f1, const CanonicalForm& f2, const Tolerance& tol) {
    if (f1.blocks.size() != f2.blocks.size()) return false;
    std::vector<char> used(f2.blocks.size(), 0);
    double scale = 1.0;
    for (const auto& b : f1.blocks) scale = std::max(scale, std::abs(b.lambda));
    const double radius = tol.cluster_radius * (1.0 + scale);
    for (const auto& b : f1.blocks) {
        bool found = false;
        for (size_t i = 0; i < f2.blocks.size() && !found; ++i) {
            if (used[i]) continue;
            const auto& c = f2.blocks[i];
            if (c.size == b.size && c.sign == b.sign && std::abs(c.lambda - b.lambda) <= radius) {
                used[i] = 1;
                found = true;
            }
        }
        if (!found) return false;
    }
    return true;
}

CanonicalForm canonical_form(const QMatrix& a, const HForm& h, const Tolerance& tol) {
    tol.validate();
    if (a.rows() != a.cols() || a.rows() != h.dim())
        throw InvalidInputError("canonical_form: dimension mismatch");
    const auto sa = is_h_selfadjoint(a, h, tol);
    if (!sa.ok)
        throw InvalidInputError("canonical_form: A is not H-selfadjoint (residual " +
                                std::to_string(sa.residual) + ")");
    std::string last = "canonical_form: no clustering radius succeeded";
    for (double thr : {3e-10, 3e-8, 3e-6}) {
        for (double mult : {1.0, 10.0, 100.0, 1e3, 1e4, 1e5}) {
            try {
                return attempt(a, h, tol, tol.cluster_radius * mult, thr);
            } catch (const AmbiguityError& e) {
                last = e.what();
            }
        }
    }
    throw AmbiguityError(last);
}

}  // namespace qindef
