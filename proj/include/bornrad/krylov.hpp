#pragma once

#include <functional>

#include "bornrad/types.hpp"

namespace bornrad {

// y = H x for a Hermitian H.
using MatVec = std::function<void(const CVec& x, CVec& y)>;

struct KrylovOptions {
    int max_dim = 30;
    double tol = 1e-10;      // local error estimate bound per substep
    long max_substeps = 200000;
};

struct KrylovStats {
    long substeps = 0;
    long matvecs = 0;
    double max_error_estimate = 0.0;
};

// exp(-i tau H) psi by Lanczos with full reorthogonalization and adaptive
// substeps. The result has the norm of psi up to rounding since the Krylov
// basis is orthonormal. Throws KrylovBreakdown if substeps collapse.
CVec krylov_expm(const MatVec& h, const CVec& psi, double tau, const KrylovOptions& opt = {},
                 KrylovStats* stats = nullptr);

// Dense matrix of a linear map of dimension n, built column by column.
CMat dense_from_matvec(const MatVec& h, Eigen::Index n);

}  // namespace bornrad
