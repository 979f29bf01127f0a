#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qindef/canonical.hpp"

namespace qindef {

/// How a zero-eigenvalue block participates in a square root: alone (only
/// 1x1 blocks), merged with a same-sign block of adjacent size, or paired
/// with an equal-size block of opposite sign.
struct ZeroGroup {
    enum class Kind { Singleton, Merged, Even };
    Kind kind = Kind::Singleton;
    size_t first = 0;   ///< index into form.blocks (larger block for Merged)
    size_t second = 0;  ///< partner index; equals first for Singleton

    /// Depth of the group's kernel direction inside the image flag:
    /// the kernel vector lies in Im B^depth.
    Eigen::Index depth(const std::vector<CanonicalBlock>& blocks) const {
        switch (kind) {
            case Kind::Singleton: return 0;
            case Kind::Merged: return blocks[first].size - 1;
            case Kind::Even: return blocks[first].size - 1;
        }
        return 0;
    }
};

struct SqrtReport {
    bool exists = false;
    std::vector<CanonicalBlock> negative_violations;
    std::vector<CanonicalBlock> zero_violations;
    std::vector<std::pair<size_t, size_t>> negative_pairs;  ///< (+1, -1) block indices
    std::vector<ZeroGroup> zero_groups;
};

/// Existence test for an H-selfadjoint square root: negative-eigenvalue
/// blocks must pair as (equal lambda, equal size, opposite signs); zero
/// blocks must partition into same-sign adjacent-size merged pairs,
/// opposite-sign equal-size pairs, or standalone 1x1 blocks.
SqrtReport sqrt_exists(const CanonicalForm& form, const Tolerance& tol = {});

struct KernelAlignment {
    bool ok = false;
    std::string witness;
};

/// Can the zero-block constructions realize Ker A = span(kernel_target)?
/// Checks dimension, containment in Ker B, the image-flag depth profile,
/// and the signature of the induced Hermitian form at every depth.
KernelAlignment kernel_alignment_check(const QMatrix& b, const HForm& h,
                                       const CanonicalForm& form, const SqrtReport& rep,
                                       const QMatrix& kernel_target, const Tolerance& tol = {});

/// Construct an H-selfadjoint A with A*A = B, certified by residuals.
/// When kernel_target is given, additionally Ker A = span(kernel_target);
/// the zero-block basis is steered onto the target kernel.
QMatrix sqrt_build(const QMatrix& b, const HForm& h, const Tolerance& tol = {},
                   const std::optional<QMatrix>& kernel_target = std::nullopt);

}  // namespace qindef
