#include "bornrad/propagators.hpp"

#include <cmath>

#include "bornrad/errors.hpp"

namespace bornrad {

MolecularOperator::MolecularOperator(FiberField h_el, double eps, SpectralPtr sp)
    : fiber_(std::move(h_el)), eps_(eps), sp_(std::move(sp)) {
    if (!sp_) sp_ = std::make_shared<Spectral>(fiber_.grid);
    kin_ = (eps_ * eps_) * sp_->k().array().square();
}

void MolecularOperator::apply_kinetic(const CVec& in, CVec& out) const {
    out = in;
    sp_->apply_symbol_blocks(out, kin_);
}

void MolecularOperator::apply(const CVec& in, CVec& out) const {
    apply_kinetic(in, out);
    CVec pot(in.size());
    fiber_.apply(in.data(), pot.data());
    out += pot;
}

CVec MolecularOperator::apply(const CVec& in) const {
    CVec out;
    apply(in, out);
    return out;
}

MatVec MolecularOperator::matvec() const {
    return [this](const CVec& x, CVec& y) { apply(x, y); };
}

MolecularOperator build_molecular_hamiltonian(const FiberField& h_el, double eps, SpectralPtr sp) {
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
    return MolecularOperator(h_el, eps, std::move(sp));
}

MolecularOperator build_molecular_hamiltonian(const ModelSpec& spec, const Grid1D& grid, double eps,
                                              SpectralPtr sp) {
    return build_molecular_hamiltonian(sample_hamiltonian(spec, grid), eps, std::move(sp));
}

namespace {

CVec strang_run(const MolecularOperator& h, const CVec& psi0, double t, long steps) {
    const double dtau = t / h.eps() / steps;
    const int n = h.n();
    const int d = h.dim();
    FiberField half = h.fiber();
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int k = 0; k < n; ++k) {
        es.compute(h.fiber()[k]);
        CVec ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, -0.5 * dtau)).array().exp();
        half[k] = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    }
    CVec kin(n);
    for (int m = 0; m < n; ++m) kin[m] = std::exp(cplx(0.0, -dtau * h.kinetic_symbol()[m]));
    CVec psi = psi0, tmp(psi0.size());
    half.apply(psi.data(), tmp.data());
    for (long s = 0; s < steps; ++s) {
        h.spectral().apply_symbol_blocks(tmp, kin);
        if (s + 1 < steps) {
            // Two adjacent half steps merge into one full potential step.
            half.apply(tmp.data(), psi.data());
            half.apply(psi.data(), tmp.data());
        }
    }
    half.apply(tmp.data(), psi.data());
    (void)d;
    return psi;
}

}  // namespace

CVec propagate_full(const MolecularOperator& h, const CVec& psi0, double t, const StrangOptions& opt,
                    PropagationInfo* info) {
    if (psi0.size() != h.size()) throw DimensionMismatch("state length does not match operator");
    if (t == 0.0) {
        if (info) *info = PropagationInfo{};
        return psi0;
    }
    double dt = opt.dt > 0.0 ? opt.dt : std::abs(t) * h.eps() / 4096.0;
    long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) / dt - 1e-9)));
    CVec psi = strang_run(h, psi0, t, steps);
    double change = 0.0;
    if (opt.self_check) {
        bool ok = false;
        for (int halving = 0; halving < opt.max_halvings; ++halving) {
            steps *= 2;
            CVec finer = strang_run(h, psi0, t, steps);
            change = (finer - psi).norm();
            psi = std::move(finer);
            if (change < opt.tol) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw StepSizeTooLarge("Strang self-check change " + std::to_string(change) +
                                   " after " + std::to_string(opt.max_halvings) + " halvings");
    }
    if (info) *info = PropagationInfo{t / steps, steps, change};
    return psi;
}

DiagonalHamiltonian::DiagonalHamiltonian(const MolecularOperator& h, FiberField projector)
    : h_(h), p_(std::move(projector)) {}

void DiagonalHamiltonian::apply(const CVec& in, CVec& out) const {
    const Eigen::Index sz = in.size();
    CVec p(sz), q(sz), tp(sz), tq(sz);
    p_.apply(in.data(), p.data());
    q = in - p;
    h_.apply_kinetic(p, tp);
    h_.apply_kinetic(q, tq);
    CVec ptp(sz);
    p_.apply(tp.data(), ptp.data());
    CVec ptq(sz);
    p_.apply(tq.data(), ptq.data());
    out = ptp + (tq - ptq);
    CVec pot(sz);
    h_.fiber().apply(in.data(), pot.data());
    out += pot;
}

CVec DiagonalHamiltonian::apply(const CVec& in) const {
    CVec out;
    apply(in, out);
    return out;
}

MatVec DiagonalHamiltonian::matvec() const {
    return [this](const CVec& x, CVec& y) { apply(x, y); };
}

DiagonalHamiltonian build_diagonal_hamiltonian(const MolecularOperator& h, const FiberField& projector) {
    if (projector.n() != h.n() || projector.dim != h.dim())
        throw ProjectorMismatch("projector field shape differs from the Hamiltonian");
    for (int k = 0; k < h.n(); ++k) {
        const CMat& p = projector[k];
        const CMat& a = h.fiber()[k];
        const double scale = std::max(1.0, a.norm());
        if ((p * p - p).norm() > 1e-10 || (p - p.adjoint()).norm() > 1e-10 ||
            (p * a - a * p).norm() > 1e-9 * scale)
            throw ProjectorMismatch("projector is not a spectral projector of H_el at x = " +
                                    std::to_string(h.fiber().grid.point(k)));
    }
    return DiagonalHamiltonian(h, projector);
}

CVec propagate_diagonal(const DiagonalHamiltonian& hj, const CVec& psi0, double t,
                        const KrylovOptions& opt, KrylovStats* stats) {
    return krylov_expm(hj.matvec(), psi0, t / hj.molecular().eps(), opt, stats);
}

BoEffective::BoEffective(RVec connection, RVec energy, RVec extra, double eps, SpectralPtr sp)
    : a_(std::move(connection)), e_(std::move(energy)), extra_(std::move(extra)), eps_(eps), sp_(std::move(sp)) {}

void BoEffective::apply(const CVec& in, CVec& out) const {
    // (-i d - A) applied twice; each factor is Hermitian on the grid.
    CVec u = in;
    sp_->derivative(u.data(), 1);
    u = (-I) * u - (a_.cast<cplx>().array() * in.array()).matrix();
    CVec w = u;
    sp_->derivative(w.data(), 1);
    w = (-I) * w - (a_.cast<cplx>().array() * u.array()).matrix();
    out = (eps_ * eps_) * w + ((e_ + extra_).cast<cplx>().array() * in.array()).matrix();
}

CVec BoEffective::apply(const CVec& in) const {
    CVec out;
    apply(in, out);
    return out;
}

MatVec BoEffective::matvec() const {
    return [this](const CVec& x, CVec& y) { apply(x, y); };
}

CMat BoEffective::dense() const {
    CMat m = dense_from_matvec(matvec(), a_.size());
    return 0.5 * (m + m.adjoint());
}

BoEffective build_bo_effective(const BandData& band, double eps, SpectralPtr sp, bool born_huang) {
    if (!sp) sp = std::make_shared<Spectral>(band.grid);
    const RVec a = berry_connection(band, *sp);
    const int n = band.grid.n_points;
    RVec extra = RVec::Zero(n);
    if (born_huang) {
        const CMat v = band.periodic_vectors();
        for (int c = 0; c < band.dim; ++c) {
            const CVec dv = sp->derivative(CVec(v.col(c)), 1);
            extra += dv.cwiseAbs2();
        }
        extra = (eps * eps) * (extra - a.cwiseAbs2());
    }
    return BoEffective(a, band.energies, extra, eps, sp);
}

CVec propagate_bo(const BoEffective& h, const CVec& phi0, double t, const KrylovOptions& opt) {
    return krylov_expm(h.matvec(), phi0, t / h.eps(), opt);
}

RVec bo_spectrum(const BoEffective& h, int count) {
    Eigen::SelfAdjointEigenSolver<CMat> es(h.dense(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().head(std::min<Eigen::Index>(count, es.eigenvalues().size()));
}

CVec spectral_filter(const MolecularOperator& h, const CVec& psi, double e_cut) {
    if (h.n() > 512) throw BudgetExceeded("dense spectral filter limited to 512 grid points");
    CMat m = dense_from_matvec(h.matvec(), h.size());
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
    const CMat& v = es.eigenvectors();
    CVec c = v.adjoint() * psi;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (es.eigenvalues()[i] > e_cut) c[i] = 0.0;
    return v * c;
}

ScalingReport adiabatic_error_scan(const ModelSpec& spec, const Grid1D& grid, int band_j,
                                   const AdiabaticScanOptions& opt) {
    const FiberField h_el = sample_hamiltonian(spec, grid);
    const BandData band = diagonalize_band(h_el, band_j);
    auto sp = std::make_shared<Spectral>(grid);
    std::vector<ScalingPoint> pts;
    for (double eps : opt.ladder) {
        const MolecularOperator h = build_molecular_hamiltonian(h_el, eps, sp);
        const DiagonalHamiltonian hj = build_diagonal_hamiltonian(h, band.projector);
        const auto batch = low_energy_batch(grid, spec.dim, eps, opt.batch, &band);
        double worst = 0.0;
        for (const auto& psi : batch) {
            const CVec full = propagate_full(h, psi, opt.t, opt.strang);
            const CVec diag = propagate_diagonal(hj, psi, opt.t, opt.krylov);
            worst = std::max(worst, (full - diag).norm());
        }
        pts.push_back({eps, worst});
    }
    return fit_scaling(pts, "adiabatic_error");
}

double bo_vs_diagonal_check(const BandData& band, const DiagonalHamiltonian& hj, const BoEffective& bo,
                            const CVec& phi, double t, const KrylovOptions& opt) {
    const CMat v = band.periodic_vectors();
    const CVec psi0 = product_state(phi, v);
    const CVec a = propagate_diagonal(hj, psi0, t, opt);
    const CVec b = product_state(propagate_bo(bo, phi, t, opt), v);
    return (a - b).norm();
}

}  // namespace bornrad
