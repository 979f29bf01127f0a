#pragma once

#include <string>
#include <vector>

#include "qindef/sqroot.hpp"

namespace qindef {

/// Ordered bases of the zero-eigenvalue blocks in their paired canonical
/// arrangement: each block holds the columns of one chain pair, either
/// (k, k) with signs (+, -) or (k, k-1) with a single sign; leftover 1x1
/// blocks form the singleton collection with a diagonal form.
struct ZeroBlockBasis {
    struct Block {
        Eigen::Index k = 1;  ///< larger chain length
        bool even = false;   ///< true: chains (k, k), signs (+,-); false: chains (k, k-1)
        int sign = 1;        ///< sign of the (k, k-1) pair; unused when even
        QMatrix cols;        ///< ordered basis, 2k or 2k-1 columns
    };
    std::vector<Block> blocks;
    QMatrix singletons;  ///< one column per standalone 1x1 zero block
    std::vector<int> singleton_signs;
};

/// Assemble the ZeroBlockBasis from a canonical form and its square-root
/// pairing report; requires rep.exists.
ZeroBlockBasis zero_block_basis(const CanonicalForm& form, const SqrtReport& rep,
                                const Tolerance& tol = {});

struct PolarReport {
    bool exists = false;
    bool cond_i = false;  ///< negative-eigenvalue blocks pair up
    std::vector<CanonicalBlock> negative_violations;
    bool cond_ii = false;  ///< zero blocks pair up
    std::vector<CanonicalBlock> zero_violations;
    bool cond_iii = false;  ///< Ker X is an achievable square-root kernel
    std::string kernel_witness;
    CanonicalForm form;  ///< canonical form of (X^[*] X, H)
};

/// Decide whether X admits an H-polar decomposition X = U A.
PolarReport polar_exists(const QMatrix& x, const HForm& h, const Tolerance& tol = {});

struct PolarResiduals {
    double factor = 0.0;       ///< ||X - U A||
    double unitarity = 0.0;    ///< ||U* H U - H||
    double selfadjoint = 0.0;  ///< ||H^{-1} A* H - A||
    double kernel = 0.0;       ///< cross residual between Ker X and Ker A
    bool kernel_match = false;
    bool ok = false;
};

struct PolarDecomposition {
    QMatrix u;  ///< H-unitary
    QMatrix a;  ///< H-selfadjoint with A^2 = X^[*] X and Ker A = Ker X
    PolarResiduals residuals;
};

/// Compute a certified H-polar decomposition X = U A.
PolarDecomposition polar_decompose(const QMatrix& x, const HForm& h, const Tolerance& tol = {});

/// Recompute all certification residuals for a claimed decomposition.
PolarResiduals verify_polar(const QMatrix& x, const HForm& h, const QMatrix& u, const QMatrix& a,
                            const Tolerance& tol = {});

struct KernelCondition {
    bool ok = false;
    std::string witness;
};

/// Can a structure-preserving change of basis align span(kerx_basis) with
/// the reference kernel of the paired zero-block arrangement?
KernelCondition kernel_condition_check(const std::vector<QMatrix>& kerx_basis,
                                       const ZeroBlockBasis& zb, const HForm& h,
                                       const Tolerance& tol = {});

}  // namespace qindef
