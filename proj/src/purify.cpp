#include "bornrad/purify.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "bornrad/errors.hpp"

namespace bornrad {

double operator_norm(const CMat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double idempotency_defect(const CMat& q) { return operator_norm(q * q - q); }

double hermiticity_defect(const CMat& q) { return operator_norm(q - q.adjoint()); }

Projection purify(const CMat& qt, const PurifyOptions& opt) {
    const CMat h = 0.5 * (qt + qt.adjoint());
    Projection out;
    if (h.rows() <= opt.eig_limit) {
        Eigen::SelfAdjointEigenSolver<CMat> es(h);
        const RVec& l = es.eigenvalues();
        double defect = 0.0;
        double dist = 0.0;
        for (Eigen::Index i = 0; i < l.size(); ++i) {
            defect = std::max(defect, std::abs(l[i] * l[i] - l[i]));
            dist = std::max(dist, l[i] > 0.5 ? std::abs(1.0 - l[i]) : std::abs(l[i]));
        }
        out.defect = defect;
        if (defect >= 0.25)
            throw DefectTooLarge("idempotency defect " + std::to_string(defect) + " >= 1/4");
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < l.size(); ++i)
            if (l[i] > 0.5) ++r;
        const CMat v = es.eigenvectors().rightCols(r);
        out.q = v * v.adjoint();
        out.rank = r;
        out.distance = dist;
        out.method = "eig";
        return out;
    }
    out.defect = idempotency_defect(h);
    if (out.defect >= 0.25)
        throw DefectTooLarge("idempotency defect " + std::to_string(out.defect) + " >= 1/4");
    CMat q = h;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const CMat q2 = q * q;
        CMat next = 3.0 * q2 - 2.0 * q2 * q;
        next = (0.5 * (next + next.adjoint())).eval();
        const double change = (next - q).cwiseAbs().maxCoeff();
        q = std::move(next);
        if (change < opt.tol) break;
    }
    spdlog::debug("Newton-Schulz purification: {} iterations", it + 1);
    out.q = q;
    out.rank = static_cast<Eigen::Index>(std::llround(q.trace().real()));
    out.distance = operator_norm(q - h);
    out.iterations = it + 1;
    out.method = "newton-schulz";
    return out;
}

}  // namespace bornrad
