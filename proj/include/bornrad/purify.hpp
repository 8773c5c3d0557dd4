#pragma once

#include <string>

#include "bornrad/types.hpp"

namespace bornrad {

// Orthogonal projection obtained from an almost-projection.
struct Projection {
    CMat q;
    Eigen::Index rank = 0;
    double defect = 0.0;    // max |l^2 - l| over the spectrum of the input
    double distance = 0.0;  // ||Q - Q~|| in operator norm
    int iterations = 0;     // Newton-Schulz steps; 0 for the eigen route
    std::string method;

    CVec apply(const CVec& v) const { return q * v; }
};

struct PurifyOptions {
    // Dense eigendecomposition up to this size, Newton-Schulz above.
    Eigen::Index eig_limit = 1024;
    int max_iterations = 100;
    double tol = 1e-13;
};

// Spectral projection of the Hermitian part of qt onto eigenvalues > 1/2.
// Throws DefectTooLarge if the defect is >= 1/4.
Projection purify(const CMat& qt, const PurifyOptions& opt = {});

double idempotency_defect(const CMat& q);   // ||Q^2 - Q||
double hermiticity_defect(const CMat& q);   // ||Q - Q*||
double operator_norm(const CMat& a);

}  // namespace bornrad
