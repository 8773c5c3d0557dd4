#include "bornrad/krylov.hpp"

#include <cmath>

#include "bornrad/errors.hpp"

namespace bornrad {

namespace {

struct Tridiag {
    RVec lambda;
    RMat s;
    // Coefficients of exp(-i h T) e1 in the Krylov basis.
    CVec coeffs(double h) const {
        const Eigen::Index m = lambda.size();
        CVec c(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            cplx acc = 0.0;
            for (Eigen::Index l = 0; l < m; ++l) acc += s(i, l) * std::exp(cplx(0.0, -h * lambda[l])) * s(0, l);
            c[i] = acc;
        }
        return c;
    }
};

}  // namespace

CVec krylov_expm(const MatVec& h, const CVec& psi, double tau, const KrylovOptions& opt,
                 KrylovStats* stats) {
    CVec v = psi;
    if (tau == 0.0) return v;
    const Eigen::Index n = psi.size();
    const int mmax = static_cast<int>(std::min<Eigen::Index>(opt.max_dim, n));
    CMat basis(n, mmax + 1);
    CVec w(n);
    double done = 0.0;
    const double sign = tau > 0 ? 1.0 : -1.0;
    const double total = std::abs(tau);
    long substeps = 0;
    while (done < total) {
        const double beta0 = v.norm();
        if (beta0 == 0.0) return v;
        basis.col(0) = v / beta0;
        RVec alpha(mmax), beta(mmax);
        int m = 0;
        bool happy = false;
        double scale = 0.0;
        for (int j = 0; j < mmax; ++j) {
            h(basis.col(j), w);
            if (stats) ++stats->matvecs;
            alpha[j] = basis.col(j).dot(w).real();
            scale = std::max(scale, std::abs(alpha[j]));
            // Two passes of classical Gram-Schmidt against the whole basis.
            for (int pass = 0; pass < 2; ++pass) {
                const CVec proj = basis.leftCols(j + 1).adjoint() * w;
                w.noalias() -= basis.leftCols(j + 1) * proj;
            }
            beta[j] = w.norm();
            scale = std::max(scale, beta[j]);
            m = j + 1;
            if (beta[j] <= 1e-13 * std::max(scale, 1e-300)) {
                happy = true;
                break;
            }
            basis.col(j + 1) = w / beta[j];
        }
        RMat t = RMat::Zero(m, m);
        for (int j = 0; j < m; ++j) {
            t(j, j) = alpha[j];
            if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<RMat> es(t);
        Tridiag td{es.eigenvalues(), es.eigenvectors()};
        const double remaining = total - done;
        auto estimate = [&](double step) {
            if (happy) return 0.0;
            const CVec c = td.coeffs(sign * step);
            return beta[m - 1] * std::abs(c[m - 1]);
        };
        double step = remaining;
        double err = estimate(step);
        if (err > opt.tol) {
            double lo = 0.0, hi = step;
            step = hi;
            while (err > opt.tol) {
                hi = step;
                step *= 0.5;
                err = estimate(step);
                if (step < 1e-14 * total)
                    throw KrylovBreakdown("substep underflow at t = " + std::to_string(done));
            }
            lo = step;
            for (int it = 0; it < 6; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double e = estimate(mid);
                if (e <= opt.tol) {
                    lo = mid;
                    err = e;
                } else {
                    hi = mid;
                }
            }
            step = lo;
        }
        const CVec c = td.coeffs(sign * step);
        v = beta0 * (basis.leftCols(m) * c);
        done += step;
        if (remaining - step < 1e-15 * total) done = total;
        if (stats) stats->max_error_estimate = std::max(stats->max_error_estimate, err);
        if (++substeps > opt.max_substeps) throw KrylovBreakdown("too many substeps");
    }
    if (stats) stats->substeps += substeps;
    return v;
}

CMat dense_from_matvec(const MatVec& h, Eigen::Index n) {
    CMat out(n, n);
    CVec e = CVec::Zero(n), y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        h(e, y);
        out.col(j) = y;
        e[j] = 0.0;
    }
    return out;
}

}  // namespace bornrad
