#include "bornrad/superadiabatic.hpp"

#include <cmath>

#include "bornrad/errors.hpp"

namespace bornrad {

void ReducedResolvent::apply(const CVec& in, CVec& out) const {
    out.resize(in.size());
    r.apply(in.data(), out.data());
}

ReducedResolvent reduced_resolvent(const FiberField& h_el, const BandData& band) {
    if (!(band.gap > 0.0)) throw GapViolation("band is not isolated", band.gap_point);
    ReducedResolvent out;
    out.band = band.index;
    out.r = zero_field(h_el.grid, h_el.dim);
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int k = 0; k < h_el.n(); ++k) {
        es.compute(h_el[k]);
        const double e = band.energies[k];
        RVec inv = RVec::Zero(h_el.dim);
        for (int l = 0; l < h_el.dim; ++l)
            if (l != band.index) inv[l] = 1.0 / (es.eigenvalues()[l] - e);
        out.r[k] = es.eigenvectors() * inv.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    }
    return out;
}

DifferentialFiberOperator::DifferentialFiberOperator(std::vector<FiberField> coeff, double eps, SpectralPtr sp)
    : coeff_(std::move(coeff)), eps_(eps), sp_(std::move(sp)) {
    if (coeff_.empty()) throw ValidationError("differential operator needs at least one coefficient");
    if (coeff_.size() > 3) throw ValidationError("differential operators of order > 2 are not supported");
    for (const auto& c : coeff_) coeff_adj_.push_back(c.adjoint());
}

void DifferentialFiberOperator::apply(const CVec& in, CVec& out) const {
    out = CVec::Zero(in.size());
    CVec tmp(in.size());
    for (size_t a = 0; a < coeff_.size(); ++a) {
        CVec dv = in;
        if (a > 0) {
            sp_->derivative_blocks(dv, static_cast<int>(a));
            dv *= std::pow(eps_, static_cast<double>(a));
        }
        coeff_[a].apply(dv.data(), tmp.data());
        out += tmp;
    }
}

CVec DifferentialFiberOperator::apply(const CVec& in) const {
    CVec out;
    apply(in, out);
    return out;
}

void DifferentialFiberOperator::apply_adjoint(const CVec& in, CVec& out) const {
    out = CVec::Zero(in.size());
    CVec tmp(in.size());
    for (size_t a = 0; a < coeff_.size(); ++a) {
        coeff_adj_[a].apply(in.data(), tmp.data());
        if (a > 0) {
            sp_->derivative_blocks(tmp, static_cast<int>(a));
            tmp *= std::pow(-eps_, static_cast<double>(a));
        }
        out += tmp;
    }
}

CVec DifferentialFiberOperator::apply_adjoint(const CVec& in) const {
    CVec out;
    apply_adjoint(in, out);
    return out;
}

DifferentialFiberOperator bracket_P0(const BandData& band, double eps, SpectralPtr sp, double tail_tol) {
    if (!sp) sp = std::make_shared<Spectral>(band.grid);
    const double tail = band.projector.fourier_tail(*sp);
    if (tail > tail_tol)
        throw RoughFiber("projector Fourier tail " + std::to_string(tail) + " exceeds " +
                         std::to_string(tail_tol));
    const FiberField d1 = band.projector.derivative(*sp, 1);
    const FiberField d2 = band.projector.derivative(*sp, 2);
    return DifferentialFiberOperator({(-eps) * d2, -2.0 * d1}, eps, sp);
}

SuperadiabaticBuilder::SuperadiabaticBuilder(const FiberField& h_el, const BandData& band, double eps,
                                             SpectralPtr sp)
    : band_(band),
      h_(build_molecular_hamiltonian(h_el, eps, sp ? sp : std::make_shared<Spectral>(h_el.grid))),
      r_(reduced_resolvent(h_el, band)),
      b_(bracket_P0(band, eps, h_.spectral_ptr())) {}

CVec SuperadiabaticBuilder::apply_p0(const CVec& v) const { return band_.projector.apply(v); }

CVec SuperadiabaticBuilder::s1(const CVec& v) const {
    CVec a;
    r_.apply(v, a);
    return apply_p0(b_.apply(a));
}

CVec SuperadiabaticBuilder::s1_adjoint(const CVec& v) const {
    CVec out;
    r_.apply(b_.apply_adjoint(apply_p0(v)), out);
    return out;
}

CVec SuperadiabaticBuilder::p1(const CVec& v) const { return s1(v) + s1_adjoint(v); }

CVec SuperadiabaticBuilder::p_tilde1(const CVec& v) const {
    const double e = eps();
    return apply_p0(v) + e * p1(v) + (e * e) * (s1_adjoint(s1(v)) - s1(s1_adjoint(v)));
}

CVec SuperadiabaticBuilder::bracket_p_tilde1(const CVec& v) const {
    const double e = eps();
    return (h_.apply(p_tilde1(v)) - p_tilde1(h_.apply(v))) / (e * e);
}

CVec SuperadiabaticBuilder::s2(const CVec& v) const {
    CVec a;
    r_.apply(v, a);
    return apply_p0(bracket_p_tilde1(a));
}

CVec SuperadiabaticBuilder::s2_adjoint(const CVec& v) const {
    // [P~1]* = -[P~1]
    CVec out;
    r_.apply(bracket_p_tilde1(apply_p0(v)), out);
    return -out;
}

CVec SuperadiabaticBuilder::p2(const CVec& v) const {
    return s2(v) + s2_adjoint(v) + s1_adjoint(s1(v)) - s1(s1_adjoint(v));
}

CVec SuperadiabaticBuilder::projection(const CVec& v, int order) const {
    const double e = eps();
    CVec out = apply_p0(v);
    if (order >= 1) out += e * p1(v);
    if (order >= 2) out += (e * e) * p2(v);
    return out;
}

RVec kinetic_window(const Spectral& sp, double eps, double e_cut) {
    const RVec& k = sp.k();
    RVec w(k.size());
    auto f = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
    for (Eigen::Index i = 0; i < k.size(); ++i) {
        const double e = eps * eps * k[i] * k[i];
        const double s = std::clamp((e - e_cut) / e_cut, 0.0, 1.0);
        w[i] = f(1.0 - s) / (f(1.0 - s) + f(s));
    }
    return w;
}

AlmostProjection::AlmostProjection(std::shared_ptr<const SuperadiabaticBuilder> b, int order, double e_cut)
    : b_(std::move(b)), order_(order), e_cut_(e_cut) {
    if (e_cut_ > 0.0)
        window_ = RVec::Ones(b_->hamiltonian().n()) -
                  kinetic_window(b_->hamiltonian().spectral(), b_->eps(), e_cut_);
}

CVec AlmostProjection::apply(const CVec& v) const {
    if (e_cut_ <= 0.0) return b_->projection(v, order_);
    const Spectral& sp = b_->hamiltonian().spectral();
    CVec full = b_->projection(v, order_);
    CVec w = v;
    sp.apply_symbol_blocks(w, window_);
    CVec corr = b_->projection(w, order_) - b_->apply_p0(w);
    sp.apply_symbol_blocks(corr, window_);
    return full - corr;
}

MatVec AlmostProjection::matvec() const {
    return [this](const CVec& x, CVec& y) { y = apply(x); };
}

CMat AlmostProjection::dense() const {
    const CMat m = dense_from_matvec(matvec(), b_->hamiltonian().size());
    return 0.5 * (m + m.adjoint());
}

AlmostProjection AlmostProjection::with_cutoff(double e_cut) const { return AlmostProjection(b_, order_, e_cut); }

double AlmostProjection::batch_defect(const std::vector<CVec>& batch) const {
    double worst = 0.0;
    for (const auto& psi : batch) {
        const CVec q = apply(psi);
        worst = std::max(worst, (apply(q) - q).norm());
    }
    return worst;
}

AlmostProjection build_superadiabatic(const FiberField& h_el, const BandData& band, double eps, int order,
                                      SpectralPtr sp, double eps0) {
    if (order != 1 && order != 2) throw ValidationError("superadiabatic order must be 1 or 2");
    if (!(eps > 0.0 && eps < eps0))
        throw ValidationError("eps = " + std::to_string(eps) + " outside (0, " + std::to_string(eps0) + ")");
    return AlmostProjection(std::make_shared<SuperadiabaticBuilder>(h_el, band, eps, std::move(sp)), order);
}

Projection purify(const AlmostProjection& qt, const PurifyOptions& opt) { return purify(qt.dense(), opt); }

SuperadiabaticScan commutator_scaling_scan(const ModelSpec& spec, const Grid1D& grid, int band_j, int order,
                                           const SuperadiabaticScanOptions& opt) {
    const FiberField h_el = sample_hamiltonian(spec, grid);
    const BandData band = diagonalize_band(h_el, band_j);
    auto sp = std::make_shared<Spectral>(grid);
    std::vector<ScalingPoint> dist, def, comm;
    SuperadiabaticScan out;
    for (double eps : opt.ladder) {
        const AlmostProjection p = build_superadiabatic(h_el, band, eps, order, sp);
        const auto batch = low_energy_batch(grid, spec.dim, eps, opt.batch);
        const Projection q = purify(p.with_cutoff(opt.cutoff_energy));
        const MolecularOperator& h = p.builder().hamiltonian();
        double wd = 0.0, wc = 0.0;
        for (const auto& psi : batch) {
            wd = std::max(wd, (p.apply(psi) - p.builder().apply_p0(psi)).norm());
            wc = std::max(wc, (h.apply(q.apply(psi)) - q.apply(h.apply(psi))).norm());
        }
        dist.push_back({eps, wd});
        def.push_back({eps, p.batch_defect(batch)});
        comm.push_back({eps, wc});
        out.purify_defect.push_back(q.defect);
    }
    const std::string tag = "order" + std::to_string(order);
    out.distance = fit_scaling(dist, "distance_" + tag);
    out.defect = fit_scaling(def, "defect_" + tag);
    out.commutator = fit_scaling(comm, "commutator_" + tag);
    return out;
}

ScalingReport band_orthogonality_check(const ModelSpec& spec, const Grid1D& grid, int band_i, int band_j,
                                       int order, const SuperadiabaticScanOptions& opt) {
    if (band_i == band_j) throw ValidationError("orthogonality check needs two distinct bands");
    const FiberField h_el = sample_hamiltonian(spec, grid);
    const BandData bi = diagonalize_band(h_el, band_i);
    const BandData bj = diagonalize_band(h_el, band_j);
    auto sp = std::make_shared<Spectral>(grid);
    std::vector<ScalingPoint> pts;
    for (double eps : opt.ladder) {
        const auto batch = low_energy_batch(grid, spec.dim, eps, opt.batch);
        CMat qi, qj;
        if (order == 0) {
            qi = dense_from_matvec([&](const CVec& x, CVec& y) { y = bi.projector.apply(x); },
                                   static_cast<Eigen::Index>(grid.n_points) * spec.dim);
            qj = dense_from_matvec([&](const CVec& x, CVec& y) { y = bj.projector.apply(x); },
                                   static_cast<Eigen::Index>(grid.n_points) * spec.dim);
        } else {
            qi = purify(build_superadiabatic(h_el, bi, eps, order, sp).with_cutoff(opt.cutoff_energy)).q;
            qj = purify(build_superadiabatic(h_el, bj, eps, order, sp).with_cutoff(opt.cutoff_energy)).q;
        }
        double worst = 0.0;
        for (const auto& psi : batch) worst = std::max(worst, (qi * (qj * psi)).norm());
        pts.push_back({eps, worst});
    }
    return fit_scaling(pts, "orthogonality_order" + std::to_string(order));
}

}  // namespace bornrad
