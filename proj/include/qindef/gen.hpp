#pragma once

#include <cstdint>
#include <vector>

#include "qindef/polar.hpp"

namespace qindef {

/// 64-bit seed of a deterministic pseudorandom stream: identical seed,
/// identical instance.
using Seed = std::uint64_t;

struct GeneratedPair {
    QMatrix a;       ///< S J S^{-1}, H-selfadjoint by construction
    HForm h;         ///< S^{-*} Hc S^{-1}
    QMatrix s_true;  ///< the similarity used, condition number <= cond_cap
};

/// Random H-selfadjoint pair with the prescribed canonical structure.
/// identity_mode forces S = I (the pair is the canonical model itself).
GeneratedPair gen_selfadjoint_pair(const std::vector<CanonicalBlock>& blocks, Seed seed,
                                   double cond_cap = 1e6, bool identity_mode = false);

/// Random H-unitary matrix via the Cayley transform of a random
/// H-skew-adjoint K: U = (I - K)(I + K)^{-1}.
QMatrix gen_h_unitary(const HForm& h, Seed seed);

struct GeneratedPolarInstance {
    QMatrix x;  ///< U A, admits an H-polar decomposition by construction
    HForm h;
    PolarDecomposition ground;  ///< the planted (U, A), certified
};

/// Decomposable instance X = U A where A is an H-selfadjoint square root of
/// a generated pair with the given blocks; requires the blocks to admit a
/// square root.
GeneratedPolarInstance gen_polar_instance(const std::vector<CanonicalBlock>& blocks, Seed seed);

}  // namespace qindef
