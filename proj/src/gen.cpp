#include "qindef/gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qindef {

namespace {

QMatrix random_qmatrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    QMatrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            m.set(i, j, Quaternion(g(rng), g(rng), g(rng), g(rng)));
    return m;
}

/// Clip the singular values of S to [sigma_max / cond_cap, sigma_max] via
/// S -> S f(S* S), a spectral function of a Hermitian quaternion matrix, so
/// the result is exactly quaternionic.
QMatrix condition_clip(const QMatrix& s, double cond_cap) {
    Eigen::VectorXd evals;
    QMatrix evecs;
    hermitian_eig(conj_transpose(s) * s, evals, evecs);
    const double smax = std::sqrt(std::max(evals.maxCoeff(), 0.0));
    const double floor_sv = smax / cond_cap;
    QMatrix scale(evals.size(), evals.size());
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        const double sv = std::sqrt(std::max(evals(i), 0.0));
        scale.set(i, i, Quaternion(std::max(sv, floor_sv) / (sv > 0 ? sv : 1.0)));
    }
    return s * (evecs * scale * conj_transpose(evecs));
}

}  // namespace

GeneratedPair gen_selfadjoint_pair(const std::vector<CanonicalBlock>& blocks, Seed seed,
                                   double cond_cap, bool identity_mode) {
    if (blocks.empty()) throw InvalidInputError("gen_selfadjoint_pair: empty block list");
    if (cond_cap < 1.0) throw InvalidInputError("gen_selfadjoint_pair: cond_cap must be >= 1");
    const auto [j, hc] = assemble(blocks);
    const Eigen::Index n = j.rows();
    QMatrix s = QMatrix::Identity(n);
    if (!identity_mode) {
        std::mt19937_64 rng(seed);
        s = condition_clip(random_qmatrix(rng, n, n), cond_cap);
    }
    const QMatrix si = qinverse(s);
    QMatrix h = conj_transpose(si) * (hc * si);
    h = 0.5 * (h + conj_transpose(h));
    GeneratedPair out{s * (j * si), HForm(h), s};
    const auto check = is_h_selfadjoint(out.a, out.h);
    if (!check.ok)
        throw AmbiguityError("gen_selfadjoint_pair: generated pair failed certification");
    return out;
}

QMatrix gen_h_unitary(const HForm& h, Seed seed) {
    const Eigen::Index n = h.dim();
    std::mt19937_64 rng(seed);
    const QMatrix id = QMatrix::Identity(n);
    for (int attempt = 0; attempt < 16; ++attempt) {
        const QMatrix r = random_qmatrix(rng, n, n);
        const QMatrix skew = (r - conj_transpose(r)) * 0.5;
        const QMatrix k = h.inverse() * skew;  // K^[*] = -K
        try {
            const QMatrix u = (id - k) * qinverse(id + k);
            if (is_h_unitary(u, h).ok) return u;
        } catch (const InvalidInputError&) {
            // I + K singular; resample
        }
    }
    throw AmbiguityError("gen_h_unitary: resampling exhausted");
}

GeneratedPolarInstance gen_polar_instance(const std::vector<CanonicalBlock>& blocks, Seed seed) {
    CanonicalForm shape;
    shape.blocks = blocks;
    sort_blocks(shape.blocks);
    const SqrtReport rep = sqrt_exists(shape);
    if (!rep.exists)
        throw InvalidInputError(
            "gen_polar_instance: the blocks do not admit an H-selfadjoint square root");
    const GeneratedPair pair = gen_selfadjoint_pair(blocks, seed);
    GeneratedPolarInstance out{QMatrix(), pair.h, PolarDecomposition{}};
    out.ground.a = sqrt_build(pair.a, pair.h);
    out.ground.u = gen_h_unitary(pair.h, seed ^ 0x9e3779b97f4a7c15ULL);
    out.x = out.ground.u * out.ground.a;
    out.ground.residuals = verify_polar(out.x, out.h, out.ground.u, out.ground.a);
    if (!out.ground.residuals.ok)
        throw AmbiguityError("gen_polar_instance: planted decomposition failed certification");
    return out;
}

}  // namespace qindef
