#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "qindef/polar.hpp"
#include "qindef/witt.hpp"

using namespace qindef;
using std::complex;

namespace {

QMatrix random_qmatrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    QMatrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            m.set(i, j, Quaternion(g(rng), g(rng), g(rng), g(rng)));
    return m;
}

QMatrix basis_vector(Eigen::Index n, Eigen::Index i) {
    QMatrix e(n, 1);
    e.set(i, 0, Quaternion(1));
    return e;
}

QMatrix diag_real(std::initializer_list<double> d) {
    QMatrix m(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double v : d) {
        m.set(i, i, Quaternion(v));
        ++i;
    }
    return m;
}

QMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = static_cast<Eigen::Index>(rows.begin()->size());
    QMatrix m(r, c);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m.set(i, j++, Quaternion(v));
        ++i;
    }
    return m;
}

struct Pair {
    QMatrix a;
    QMatrix h;
};

/// H-selfadjoint A with prescribed canonical structure under a random
/// similarity, together with the matching H.
Pair planted_pair(std::mt19937_64& rng, const std::vector<CanonicalBlock>& blocks) {
    const auto [j, hc] = assemble(blocks);
    const QMatrix s = random_qmatrix(rng, j.rows(), j.rows());
    const QMatrix si = qinverse(s);
    QMatrix h = conj_transpose(si) * hc * si;
    h = 0.5 * (h + conj_transpose(h));
    return {s * j * si, h};
}

QMatrix random_h_unitary(std::mt19937_64& rng, const HForm& h) {
    const Eigen::Index n = h.dim();
    const QMatrix r = random_qmatrix(rng, n, n);
    const QMatrix s = (r - conj_transpose(r)) * 0.5;
    const QMatrix k = h.inverse() * s;
    const QMatrix id = QMatrix::Identity(n);
    return (id - k) * qinverse(id + k);
}

std::vector<QMatrix> kernel_of(const QMatrix& m) {
    return subspace_extract(m).kernel_basis;
}

}  // namespace

TEST_CASE("polar existence on the fixed instances") {
    const HForm q2(sip(2));
    // Isotropic alignable kernel: exists.
    const QMatrix x1 = from_rows({{1, 0}, {0, 0}});
    const PolarReport r1 = polar_exists(x1, q2);
    CHECK(r1.exists);
    CHECK(r1.cond_i);
    CHECK(r1.cond_ii);
    CHECK(r1.cond_iii);

    // Non-isotropic kernel span{e1+e2}: condition (iii) must fail.
    const QMatrix x2 = from_rows({{1, -1}, {0, 0}});
    const PolarReport r2 = polar_exists(x2, q2);
    CHECK_FALSE(r2.exists);
    CHECK(r2.cond_i);
    CHECK(r2.cond_ii);
    CHECK_FALSE(r2.cond_iii);

    // B = -I with signs (+,-): condition (i) pairing holds.
    const HForm d(diag_real({1.0, -1.0}));
    const QMatrix x3 = from_rows({{0, 1}, {1, 0}});
    const PolarReport r3 = polar_exists(x3, d);
    CHECK(r3.exists);
}

TEST_CASE("polar existence failures of conditions (i) and (ii)") {
    // B = diag(-1,-2): two negative blocks with different eigenvalues.
    const HForm d(diag_real({1.0, -1.0}));
    QMatrix x(2, 2);
    x.set(0, 1, Quaternion(std::sqrt(2.0)));
    x.set(1, 0, Quaternion(1.0));
    const PolarReport r = polar_exists(x, d);
    CHECK_FALSE(r.exists);
    CHECK_FALSE(r.cond_i);
    CHECK(r.negative_violations.size() == 2);

    // B similar to a single 2x2 nilpotent block: condition (ii) fails.
    const HForm q2(sip(2));
    const QMatrix x2 = from_rows({{1, 0}, {1, 0}});
    const PolarReport r2 = polar_exists(x2, q2);
    CHECK_FALSE(r2.exists);
    CHECK_FALSE(r2.cond_ii);
    CHECK(r2.zero_violations.size() == 1);  // the lone J_2(0) block

    CHECK_THROWS_AS(polar_decompose(x2, q2), NonexistenceError);
}

TEST_CASE("polar decomposition on the fixed instances") {
    const HForm q2(sip(2));
    const QMatrix x1 = from_rows({{1, 0}, {0, 0}});
    const PolarDecomposition d1 = polar_decompose(x1, q2);
    CHECK(d1.residuals.ok);
    // Ker A = Ker X = span{e2}.
    const auto ka = kernel_of(d1.a);
    REQUIRE(ka.size() == 1);
    CHECK(ka[0](0, 0).abs() <= 1e-8);

    const HForm hid(QMatrix::Identity(2));
    const QMatrix x2 = diag_real({2.0, 0.0});
    const PolarDecomposition d2 = polar_decompose(x2, hid);
    CHECK(d2.residuals.ok);
    CHECK((d2.a - x2).norm() <= 1e-8);  // Euclidean case: A = diag(2,0)

    const HForm d(diag_real({1.0, -1.0}));
    const QMatrix x3 = from_rows({{0, 1}, {1, 0}});
    const PolarDecomposition d3 = polar_decompose(x3, d);
    CHECK(d3.residuals.ok);
}

TEST_CASE("verify_polar flags each violated identity") {
    const HForm q2(sip(2));
    const QMatrix x = from_rows({{1, 0}, {0, 0}});
    const QMatrix u = from_rows({{0, 1}, {1, 0}});
    const QMatrix a = from_rows({{0, 0}, {1, 0}});
    const PolarResiduals good = verify_polar(x, q2, u, a);
    CHECK(good.ok);
    CHECK(good.factor <= 1e-12);
    CHECK(good.unitarity <= 1e-12);
    CHECK(good.selfadjoint <= 1e-12);
    CHECK(good.kernel_match);

    // A = X is not Q2-selfadjoint here.
    const PolarResiduals bad_a = verify_polar(x, q2, QMatrix::Identity(2), x);
    CHECK_FALSE(bad_a.ok);
    CHECK(bad_a.selfadjoint > 1e-3);

    // Perturbed U breaks unitarity.
    QMatrix up = u;
    up.set(0, 0, Quaternion(1e-3));
    const PolarResiduals bad_u = verify_polar(x, q2, up, a);
    CHECK_FALSE(bad_u.ok);
    CHECK(bad_u.unitarity > 1e-4);
}

TEST_CASE("round trip on planted decomposable instances") {
    std::mt19937_64 rng(91);
    const std::vector<std::vector<CanonicalBlock>> cases = {
        {{{2.0, 0.0}, 2, 1}, {{0.5, 0.0}, 1, -1}},
        {{{0.0, 0.0}, 2, 1}, {{0.0, 0.0}, 1, 1}},
        {{{0.0, 0.0}, 1, 1}, {{0.0, 0.0}, 1, -1}, {{1.0, 0.0}, 1, 1}},
        {{{0.0, 1.0}, 1, 0}, {{0.0, 0.0}, 1, 1}},
        {{{-1.5, 0.0}, 1, 1}, {{-1.5, 0.0}, 1, -1}, {{0.0, 0.0}, 2, 1}, {{0.0, 0.0}, 1, 1}},
        {{{1.0, 2.0}, 2, 0}},
    };
    for (const auto& blocks : cases) {
        for (int rep = 0; rep < 3; ++rep) {
            const Pair p = planted_pair(rng, blocks);  // A0 is H-selfadjoint
            const HForm h(p.h);
            const QMatrix u0 = random_h_unitary(rng, h);
            const QMatrix x = u0 * p.a;
            const PolarReport report = polar_exists(x, h);
            CHECK(report.exists);
            const PolarDecomposition dec = polar_decompose(x, h);
            CHECK(dec.residuals.ok);
            CHECK(verify_polar(x, h, dec.u, dec.a).ok);
            CHECK((dec.a * dec.a - h_adjoint(x, h) * x).norm() <=
                  1e-7 * (1.0 + x.norm() * x.norm()));
        }
    }
}

TEST_CASE("soundness: decompose succeeds exactly when existence holds") {
    std::mt19937_64 rng(92);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 2 + (t % 3);
        const QMatrix g = random_qmatrix(rng, n, n);
        HForm h = [&] {
            try {
                return HForm(g + conj_transpose(g));
            } catch (const InvalidInputError&) {
                return HForm(g + conj_transpose(g) + 6.0 * QMatrix::Identity(n));
            }
        }();
        // Mix full-rank and rank-deficient inputs.
        QMatrix x = random_qmatrix(rng, n, n);
        if (t % 2 == 1) x = random_qmatrix(rng, n, n - 1) * random_qmatrix(rng, n - 1, n);
        const PolarReport rep = polar_exists(x, h);
        if (rep.exists) {
            const PolarDecomposition dec = polar_decompose(x, h);
            CHECK(dec.residuals.ok);
        } else {
            CHECK_THROWS_AS(polar_decompose(x, h), NonexistenceError);
        }
    }
}

TEST_CASE("kernel_condition_check on the 2x2 isotropy fixtures") {
    const HForm q2(sip(2));
    const QMatrix b = QMatrix::Zero(2, 2);
    const CanonicalForm form = canonical_form(b, q2);
    const SqrtReport rep = sqrt_exists(form);
    REQUIRE(rep.exists);
    const ZeroBlockBasis zb = zero_block_basis(form, rep);

    CHECK(kernel_condition_check({basis_vector(2, 1)}, zb, q2).ok);
    CHECK_FALSE(kernel_condition_check({basis_vector(2, 0) + basis_vector(2, 1)}, zb, q2).ok);
}

TEST_CASE("kernel_condition_check accepts the reference kernel") {
    std::mt19937_64 rng(93);
    const std::vector<std::vector<CanonicalBlock>> cases = {
        {{{0.0, 0.0}, 2, 1}, {{0.0, 0.0}, 1, 1}},
        {{{0.0, 0.0}, 2, 1}, {{0.0, 0.0}, 2, -1}, {{0.0, 0.0}, 1, -1}},
        {{{0.0, 0.0}, 1, 1}, {{0.0, 0.0}, 1, -1}, {{3.0, 0.0}, 1, 1}},
    };
    for (const auto& blocks : cases) {
        const Pair p = planted_pair(rng, blocks);
        const HForm h(p.h);
        const CanonicalForm form = canonical_form(p.a, h);
        const SqrtReport rep = sqrt_exists(form);
        REQUIRE(rep.exists);
        const ZeroBlockBasis zb = zero_block_basis(form, rep);
        // Reference kernel: e_{i,1} + e_{i,k+1} for even pairs, e_{i,1} for
        // merged pairs, every singleton column.
        std::vector<QMatrix> ref;
        for (const auto& blk : zb.blocks)
            ref.push_back(blk.even ? QMatrix(blk.cols.col(0) + blk.cols.col(blk.k))
                                   : blk.cols.col(0));
        for (Eigen::Index i = 0; i < zb.singletons.cols(); ++i)
            ref.push_back(zb.singletons.col(i));
        const KernelCondition kc = kernel_condition_check(ref, zb, h);
        CHECK(kc.ok);

        // The kernel of an actual square root must also align.
        const QMatrix root = sqrt_build(p.a, h);
        const KernelCondition kc2 = kernel_condition_check(kernel_of(root), zb, h);
        CHECK(kc2.ok);

        // A deliberately wrong kernel (too large) must fail.
        std::vector<QMatrix> wrong = ref;
        if (zb.blocks.size() + static_cast<size_t>(zb.singletons.cols()) <
            static_cast<size_t>(p.a.rows())) {
            wrong.push_back(random_qmatrix(rng, p.a.rows(), 1));
            CHECK_FALSE(kernel_condition_check(wrong, zb, h).ok);
        }
    }
}

TEST_CASE("existence analysis is consistent with the complex embedding") {
    const HForm q2(sip(2));
    const HForm d(diag_real({1.0, -1.0}));
    const std::vector<std::pair<QMatrix, const HForm*>> cases = {
        {from_rows({{1, 0}, {0, 0}}), &q2},
        {from_rows({{1, -1}, {0, 0}}), &q2},
        {from_rows({{0, 1}, {1, 0}}), &d},
    };
    for (const auto& [x, h] : cases) {
        const PolarReport rep = polar_exists(x, *h);
        const QMatrix xe = QMatrix::FromComplex(omega_embed(x));
        const HForm he(QMatrix::FromComplex(omega_embed(h->matrix())));
        const PolarReport rep_e = polar_exists(xe, he);
        CHECK(rep.exists == rep_e.exists);
        CHECK(rep.cond_i == rep_e.cond_i);
        CHECK(rep.cond_ii == rep_e.cond_ii);
    }
}
