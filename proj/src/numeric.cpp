#include "qindef/numeric.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace qindef {

namespace {

using SVD = Eigen::BDCSVD<ComplexMatrix>;

/// Modified Gram-Schmidt over the quaternions, two passes.
QMatrix mgs(const QMatrix& in) {
    QMatrix q = in;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        QMatrix v = q.col(j);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const QMatrix u = q.col(i);
                v = v - u.scaled_right(dot(u, v));
            }
        }
        const double nv = v.norm();
        if (nv > 0) v = v * (1.0 / nv);
        q.set_col(j, v);
    }
    return q;
}

}  // namespace

QMatrix hcat(const std::vector<QMatrix>& cols) {
    if (cols.empty()) return QMatrix();
    Eigen::Index total = 0;
    for (const auto& c : cols) total += c.cols();
    QMatrix out(cols.front().rows(), total);
    Eigen::Index at = 0;
    for (const auto& c : cols) {
        out.set_block(0, at, c);
        at += c.cols();
    }
    return out;
}

QMatrix omega_extract(const ComplexMatrix& m, const Tolerance& tol) {
    if (m.rows() != m.cols() || m.rows() % 2 != 0)
        throw InvalidInputError("omega_extract: matrix must be 2n x 2n");
    const Eigen::Index n = m.rows() / 2;
    const ComplexMatrix a1 = m.topLeftCorner(n, n);
    const ComplexMatrix a2 = -m.bottomLeftCorner(n, n);
    const double scale = 1.0 + m.norm();
    const double mismatch =
        std::sqrt((m.topRightCorner(n, n) - a2.conjugate()).squaredNorm() +
                  (m.bottomRightCorner(n, n) - a1.conjugate()).squaredNorm());
    if (mismatch > tol.residual_tol * scale)
        throw InvalidInputError("omega_extract: input violates the Omega block pattern");
    return QMatrix(a1, a2);
}

std::vector<Eigen::Index> structure_select(const ComplexMatrix& cols, double drop_tol) {
    std::vector<Eigen::Index> accepted;
    if (cols.cols() == 0) return accepted;
    ComplexMatrix basis(cols.rows(), cols.cols() * 2);
    Eigen::Index nb = 0;
    auto add = [&](ComplexVector v) {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < nb; ++i)
                v -= basis.col(i) * (basis.col(i).dot(v));
        const double nv = v.norm();
        if (nv <= 0) return false;
        basis.col(nb++) = v / nv;
        return true;
    };
    for (Eigen::Index j = 0; j < cols.cols(); ++j) {
        ComplexVector z = cols.col(j);
        ComplexVector res = z;
        for (Eigen::Index i = 0; i < nb; ++i) res -= basis.col(i) * (basis.col(i).dot(res));
        if (res.norm() > drop_tol * z.norm()) {
            accepted.push_back(j);
            add(z);
            add(structure_map(z));
        }
    }
    return accepted;
}

SubspaceDecomposition subspace_extract(const QMatrix& a, const Tolerance& tol) {
    tol.validate();
    SubspaceDecomposition out;
    if (a.rows() == 0 || a.cols() == 0) {
        out.rank = 0;
        return out;
    }
    const ComplexMatrix m = omega_embed(a);
    SVD svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    Eigen::Index rank_c = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol.rank_tol * smax) ++rank_c;
    if (rank_c % 2 != 0)
        throw AmbiguityError("subspace_extract: odd complex rank, threshold is ambiguous");
    out.rank = rank_c / 2;

    const Eigen::Index ker_c = 2 * a.cols() - rank_c;
    if (ker_c > 0) {
        const ComplexMatrix kc = svd.matrixV().rightCols(ker_c);
        const auto idx = structure_select(kc);
        std::vector<QMatrix> cols;
        for (auto i : idx) cols.push_back(phi_pullback(kc.col(i)));
        QMatrix kb = mgs(hcat(cols));
        for (Eigen::Index j = 0; j < kb.cols(); ++j) out.kernel_basis.push_back(kb.col(j));
    }
    if (rank_c > 0) {
        const ComplexMatrix ic = svd.matrixU().leftCols(rank_c);
        const auto idx = structure_select(ic);
        std::vector<QMatrix> cols;
        for (auto i : idx) cols.push_back(phi_pullback(ic.col(i)));
        QMatrix ib = mgs(hcat(cols));
        for (Eigen::Index j = 0; j < ib.cols(); ++j) out.image_basis.push_back(ib.col(j));
    }
    if (static_cast<Eigen::Index>(out.kernel_basis.size()) + out.rank != a.cols())
        throw AmbiguityError("subspace_extract: structure selection lost dimensions");
    return out;
}

Eigen::Index qrank(const QMatrix& a, const Tolerance& tol) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    SVD svd(omega_embed(a));
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    Eigen::Index rank_c = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol.rank_tol * smax) ++rank_c;
    if (rank_c % 2 != 0) throw AmbiguityError("qrank: odd complex rank");
    return rank_c / 2;
}

std::vector<std::complex<double>> right_eigenvalues(const QMatrix& a, const Tolerance& tol) {
    tol.validate();
    if (a.rows() != a.cols()) throw InvalidInputError("right_eigenvalues: matrix must be square");
    const Eigen::Index n = a.rows();
    if (n == 0) return {};
    Eigen::ComplexEigenSolver<ComplexMatrix> es(omega_embed(a), false);
    std::vector<std::complex<double>> folded(2 * n);
    double scale = 0.0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const auto v = es.eigenvalues()(i);
        folded[i] = {v.real(), std::abs(v.imag())};
        scale = std::max(scale, std::abs(v));
    }
    const double radius = tol.cluster_radius * (1.0 + scale);

    // Single-linkage clustering of the folded values.
    std::vector<int> parent(2 * n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (Eigen::Index i = 0; i < 2 * n; ++i)
        for (Eigen::Index j = i + 1; j < 2 * n; ++j)
            if (std::abs(folded[i] - folded[j]) <= radius) parent[find(i)] = find(j);

    std::vector<std::complex<double>> out;
    std::vector<char> seen(2 * n, 0);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const int root = find(static_cast<int>(i));
        if (seen[root]) continue;
        seen[root] = 1;
        std::complex<double> sum = 0;
        int count = 0;
        for (Eigen::Index j = 0; j < 2 * n; ++j)
            if (find(static_cast<int>(j)) == root) {
                sum += folded[j];
                ++count;
            }
        if (count % 2 != 0)
            throw AmbiguityError("right_eigenvalues: conjugate pairing is ambiguous at this radius");
        std::complex<double> rep = sum / static_cast<double>(count);
        if (rep.imag() <= radius) rep = {rep.real(), 0.0};
        for (int c = 0; c < count / 2; ++c) out.push_back(rep);
    }
    std::sort(out.begin(), out.end(), [](auto l, auto r) {
        return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
    });
    return out;
}

QMatrix qsolve(const QMatrix& a, const QMatrix& b) {
    if (a.rows() != b.rows()) throw InvalidInputError("qsolve: shape mismatch");
    const ComplexMatrix m = omega_embed(a);
    const ComplexMatrix rhs = phi_cols(b);
    return phi_pullback(m.colPivHouseholderQr().solve(rhs));
}

QMatrix qsolve_minnorm(const QMatrix& a, const QMatrix& b) {
    if (a.rows() != b.rows()) throw InvalidInputError("qsolve_minnorm: shape mismatch");
    SVD svd(omega_embed(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    return phi_pullback(svd.solve(phi_cols(b)));
}

QMatrix qinverse(const QMatrix& a, const Tolerance& tol) {
    if (a.rows() != a.cols()) throw InvalidInputError("qinverse: matrix must be square");
    if (qrank(a, tol) != a.rows()) throw InvalidInputError("qinverse: matrix is singular");
    return qsolve(a, QMatrix::Identity(a.rows()));
}

QMatrix orthonormal_span(const QMatrix& a, const Tolerance& tol) {
    if (a.cols() == 0) return QMatrix(a.rows(), 0);
    ComplexMatrix both(2 * a.rows(), 2 * a.cols());
    both.leftCols(a.cols()) = phi_cols(a);
    both.rightCols(a.cols()) = structure_map(phi_cols(a));
    SVD svd(both, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    Eigen::Index rank_c = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol.rank_tol * smax) ++rank_c;
    if (rank_c == 0) return QMatrix(a.rows(), 0);
    const ComplexMatrix u = svd.matrixU().leftCols(rank_c);
    const auto idx = structure_select(u);
    std::vector<QMatrix> cols;
    for (auto i : idx) cols.push_back(phi_pullback(u.col(i)));
    return mgs(hcat(cols));
}

void hermitian_eig(const QMatrix& a, Eigen::VectorXd& evals, QMatrix& evecs) {
    if (a.rows() != a.cols()) throw InvalidInputError("hermitian_eig: matrix must be square");
    const Eigen::Index n = a.rows();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(omega_embed(a));
    const auto idx = structure_select(es.eigenvectors());
    if (static_cast<Eigen::Index>(idx.size()) != n)
        throw AmbiguityError("hermitian_eig: structure selection failed");
    evals.resize(n);
    std::vector<QMatrix> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
        evals(j) = es.eigenvalues()(idx[j]);
        cols.push_back(phi_pullback(es.eigenvectors().col(idx[j])));
    }
    evecs = mgs(hcat(cols));
}

}  // namespace qindef
