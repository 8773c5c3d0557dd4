#include "bornrad/transition.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "bornrad/errors.hpp"

namespace bornrad {

namespace {

// Dense matrix of a column operator on length-n grid functions.
CMat column_operator(const Spectral& sp, int order) {
    const int n = sp.grid().n_points;
    CMat m(n, n);
    for (int y = 0; y < n; ++y) {
        CVec e = CVec::Zero(n);
        e[y] = 1.0;
        m.col(y) = sp.derivative(e, order);
    }
    return m;
}

}  // namespace

BandPropagator::BandPropagator(const BandData& band, double eps, const Spectral& sp)
    : band_(band), eps_(eps), phi_(band.periodic_vectors()) {
    const int n = band.grid.n_points;
    const CMat k = -(eps * eps) * column_operator(sp, 2);
    const CMat overlap = phi_.conjugate() * phi_.transpose();  // <phi(x), phi(y)>
    b_ = k.cwiseProduct(overlap);
    for (int x = 0; x < n; ++x) b_(x, x) += band.energies[x];
    b_ = (0.5 * (b_ + b_.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(b_);
    lam_ = es.eigenvalues();
    v_ = es.eigenvectors();
}

CVec BandPropagator::coefficients(const CVec& psi) const {
    const int n = band_.grid.n_points;
    CVec c = CVec::Zero(n);
    for (int col = 0; col < band_.dim; ++col)
        c += phi_.col(col).conjugate().cwiseProduct(psi.segment(static_cast<Eigen::Index>(col) * n, n));
    return c;
}

CVec BandPropagator::embed(const CVec& c) const { return product_state(c, phi_); }

CVec BandPropagator::evolve(const CVec& c, double t) const {
    CVec a = v_.adjoint() * c;
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] *= std::exp(cplx(0.0, -t / eps_ * lam_[i]));
    return v_ * a;
}

TransitionOperator build_transition_operator(const BandData& band_i, const BandData& band_j, const FiberField& mu,
                                             const PhotonModes& modes, double eps, double delta, bool with_t2,
                                             const Spectral& sp) {
    const int n = band_i.grid.n_points;
    TransitionOperator op;
    op.eps = eps;
    op.delta = delta;
    op.with_t2 = with_t2;
    op.gap = band_j.energies - band_i.energies;
    for (int x = 0; x < n; ++x)
        if (!(op.gap[x] > 0.0))
            throw WrongSign("E_j - E_i = " + std::to_string(op.gap[x]) + " at x = " +
                            std::to_string(band_i.grid.point(x)));
    const CMat pi_vec = band_i.periodic_vectors();
    const CMat pj_vec = band_j.periodic_vectors();
    op.dipole.resize(n);
    for (int x = 0; x < n; ++x) {
        const CVec vi = pi_vec.row(x).transpose();
        op.dipole[x] = vi.dot(mu[x] * pj_vec.row(x).transpose());
    }
    const int mm = modes.count();
    op.amp.resize(n, mm);
    op.amp_t2 = CMat::Zero(n, mm);
    const cplx pre = cplx(0.0, delta) / (2.0 * pi * std::sqrt(eps));
    const CVec dgap = sp.derivative(CVec(op.gap.cast<cplx>()), 1);
    for (int m = 0; m < mm; ++m) {
        const double k = modes.k[m];
        const double ang = std::sqrt(8.0 * pi * modes.w[m] / 3.0) * std::sqrt(k);
        for (int x = 0; x < n; ++x) {
            const cplx den = cplx(k - op.gap[x], delta);
            op.amp(x, m) = pre * ang * op.dipole[x] * op.gap[x] / den;
            if (with_t2)
                op.amp_t2(x, m) =
                    op.amp(x, m) * cplx(0.0, 2.0 * eps * dgap[x].real()) / (delta * std::sqrt(k) * den);
        }
    }
    return op;
}

namespace {

// c -> <phi_j, -i eps d/dx (c phi_j)> as a dense matrix.
CMat momentum_in_band(const BandPropagator& bj, const Spectral& sp) {
    const CMat& phi = bj.vectors();
    const CMat overlap = phi.conjugate() * phi.transpose();
    return (cplx(0.0, -bj.eps()) * column_operator(sp, 1)).cwiseProduct(overlap);
}

}  // namespace

DressedState TransitionOperator::apply(const CVec& psi, const BandPropagator& bi, const BandPropagator& bj,
                                       const Spectral& sp) const {
    const int n = static_cast<int>(amp.rows());
    const int mm = static_cast<int>(amp.cols());
    const int d = bi.band().dim;
    const CVec c = bj.coefficients(psi);
    CVec p;
    if (with_t2) p = momentum_in_band(bj, sp) * c;
    DressedState out{n, d, mm, CVec::Zero(static_cast<Eigen::Index>(n) * d * (mm + 1))};
    for (int m = 0; m < mm; ++m) {
        CVec a = amp.col(m).cwiseProduct(c);
        if (with_t2) a += amp_t2.col(m).cwiseProduct(p);
        out.sector(m + 1) = bi.embed(a);
    }
    return out;
}

namespace {

CMat dyson_accumulate(const TransitionOperator& op, const BandPropagator& bi, const BandPropagator& bj,
                      const PhotonModes& modes, const CVec& c0, const CMat& pmat, double t, long steps) {
    const double eps = bi.eps();
    const double h = t / steps;
    const Eigen::Index n = op.amp.rows();
    const CMat vih = bi.eigenvectors().adjoint();
    const CVec c0h = bj.eigenvectors().adjoint() * c0;
    CMat acc = CMat::Zero(n, op.amp.cols());
    CMat y(n, op.amp.cols());
    for (long l = 0; l < steps; ++l) {
        const double s = (l + 0.5) * h;
        CVec ph(n);
        for (Eigen::Index q = 0; q < n; ++q) ph[q] = std::exp(cplx(0.0, -s / eps * bj.eigenvalues()[q])) * c0h[q];
        const CVec cs = bj.eigenvectors() * ph;
        y = op.amp.array().colwise() * cs.array();
        if (op.with_t2) {
            const CVec ps = pmat * cs;
            y.array() += op.amp_t2.array().colwise() * ps.array();
        }
        CMat z = vih * y;
        const double r = (t - s) / eps;
        for (Eigen::Index q = 0; q < n; ++q) z.row(q) *= std::exp(cplx(0.0, -r * bi.eigenvalues()[q]));
        for (Eigen::Index m = 0; m < z.cols(); ++m) z.col(m) *= std::exp(cplx(0.0, -r * modes.k[m]));
        acc += z;
    }
    return cplx(0.0, h) * acc;
}

}  // namespace

DysonResult dyson_transition(const TransitionOperator& op, const BandPropagator& bi, const BandPropagator& bj,
                             const PhotonModes& modes, const CVec& psi0, double t, double coupling,
                             const Spectral& sp, const DysonOptions& opt) {
    const int n = static_cast<int>(op.amp.rows());
    const int mm = static_cast<int>(op.amp.cols());
    const int d = bi.band().dim;
    DysonResult res;
    res.state = DressedState{n, d, mm, CVec::Zero(static_cast<Eigen::Index>(n) * d * (mm + 1))};
    if (t == 0.0) return res;
    const double eps = bi.eps();
    const CVec c0 = bj.coefficients(psi0);
    const CMat pmat = op.with_t2 ? momentum_in_band(bj, sp) : CMat();
    long steps = std::max<long>(1, static_cast<long>(std::ceil(opt.steps_per_unit * std::abs(t) / eps)));
    CMat acc = dyson_accumulate(op, bi, bj, modes, c0, pmat, t, steps);
    if (opt.check_doubling) {
        const CMat fine = dyson_accumulate(op, bi, bj, modes, c0, pmat, t, 2 * steps);
        const double a = acc.squaredNorm(), b = fine.squaredNorm();
        res.doubling_change = b > 0.0 ? std::abs(a - b) / b : std::abs(a - b);
        steps *= 2;
        acc = fine;
        if (res.doubling_change > opt.tol)
            throw QuadratureNotConverged("Dyson quadrature changed by " + std::to_string(res.doubling_change) +
                                         " on doubling");
    }
    res.steps = steps;
    const CMat coeff = bi.eigenvectors() * acc;
    for (int m = 0; m < mm; ++m) res.state.sector(m + 1) = bi.embed(coeff.col(m));
    res.norm2 = acc.squaredNorm();
    res.probability = res.norm2 * coupling * coupling / eps;
    spdlog::debug("Dyson: {} steps, doubling change {:.2e}", steps, res.doubling_change);
    return res;
}

}  // namespace bornrad
