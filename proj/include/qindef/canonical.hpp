#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "qindef/indefinite.hpp"
#include "qindef/numeric.hpp"
#include "qindef/qmatrix.hpp"

namespace qindef {

/// One canonical block. Real eigenvalues carry a sign eta in {+1,-1} and
/// contribute (J_k(lambda), eta*Q_k); nonreal eigenvalues (Im > 0) carry
/// sign 0 and contribute the paired structure (J_k(lambda) + J_k(conj),
/// Q_{2k}) of order 2k.
struct CanonicalBlock {
    std::complex<double> lambda;
    Eigen::Index size = 1;
    int sign = 0;

    bool is_real() const { return lambda.imag() == 0.0; }
    Eigen::Index order() const { return is_real() ? size : 2 * size; }
};

struct ResidualReport {
    double similarity = 0.0;  ///< |A S - S J| / (|S| (1 + |A|))
    double congruence = 0.0;  ///< |S* H S - Hc| / (|S|^2 |H|)
};

struct CanonicalForm {
    std::vector<CanonicalBlock> blocks;
    QMatrix S;
    ResidualReport residuals;
};

/// Canonical form of an H-selfadjoint pair: S^{-1} A S = J and S* H S = Hc
/// with (J, Hc) = assemble(blocks). Blocks are sorted by (Re, Im) of the
/// eigenvalue, then size descending, then sign descending.
CanonicalForm canonical_form(const QMatrix& a, const HForm& h, const Tolerance& tol = {});

/// Direct sums in the canonical order: all real blocks first (with eta*Q_k),
/// then all nonreal pairs (with Q_{2k}), each group in the given order.
std::pair<QMatrix, QMatrix> assemble(const std::vector<CanonicalBlock>& blocks);

/// True iff the block multisets agree: eigenvalues within cluster_radius,
/// sizes and signs exactly.
bool forms_equal(const CanonicalForm& f1, const CanonicalForm& f2, const Tolerance& tol = {});

/// The canonical ordering used by canonical_form.
void sort_blocks(std::vector<CanonicalBlock>& blocks);

}  // namespace qindef
