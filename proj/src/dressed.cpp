#include "bornrad/dressed.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "bornrad/errors.hpp"
#include "bornrad/superadiabatic.hpp"

namespace bornrad {

QuadratureScheme parse_scheme(const std::string& name) {
    if (name == "uniform-midpoint" || name == "midpoint") return QuadratureScheme::midpoint;
    if (name == "gauss-legendre") return QuadratureScheme::gauss_legendre;
    throw ValidationError("unknown quadrature scheme '" + name + "'");
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, RVec& x, RVec& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int l = 2; l <= n; ++l) {
                const double p2 = ((2.0 * l - 1.0) * z * p1 - (l - 1.0) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace

PhotonModes build_modes(double lambda0, int count, QuadratureScheme scheme, const RVec* gaps) {
    if (count < 8) throw ValidationError("at least 8 photon modes are required");
    if (!(lambda0 > 0.0)) throw ValidationError("UV cutoff must be positive");
    PhotonModes m;
    m.lambda0 = lambda0;
    m.scheme = scheme;
    if (scheme == QuadratureScheme::midpoint) {
        const double h = lambda0 / count;
        m.k = RVec::LinSpaced(count, 0.5 * h, lambda0 - 0.5 * h);
        m.w = RVec::Constant(count, h);
    } else {
        RVec x, w;
        gauss_legendre(count, x, w);
        m.k = 0.5 * lambda0 * (x.array() + 1.0);
        m.w = 0.5 * lambda0 * w;
    }
    m.rho = RVec::Constant(count, std::pow(2.0 * pi, -1.5));
    if (gaps) {
        double off = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < gaps->size(); ++i)
            for (int q = 0; q < count; ++q) off = std::min(off, std::abs(m.k[q] - (*gaps)[i]));
        m.resonance_offset = off;
        if (off < 1e-12) throw ResonantMode("a photon mode coincides with a transition energy");
        spdlog::debug("photon modes: minimal resonance offset {:.3e}", off);
    }
    return m;
}

double coupling_density(double k) { return 2.0 / (3.0 * pi) * k; }

CouplingOperator build_coupling(const FiberField& h_el, const FiberField& mu, const PhotonModes& modes) {
    if (h_el.n() != mu.n() || h_el.dim != mu.dim) throw DimensionMismatch("dipole field shape differs from H_el");
    CouplingOperator c;
    c.c = zero_field(h_el.grid, h_el.dim);
    for (int k = 0; k < h_el.n(); ++k) c.c[k] = I * (h_el[k] * mu[k] - mu[k] * h_el[k]);
    c.c_adj = c.c.adjoint();
    c.g.resize(modes.count());
    for (int m = 0; m < modes.count(); ++m) c.g[m] = std::sqrt(coupling_density(modes.k[m]) * modes.w[m]);
    return c;
}

double discrete_golden_rule_rate(const PhotonModes& modes, double gap, double matrix_element, double width) {
    if (width <= 0.0) width = modes.lambda0 / modes.count();
    double rate = 0.0;
    for (int m = 0; m < modes.count(); ++m) {
        const double g2 = coupling_density(modes.k[m]) * modes.w[m];
        const double x = modes.k[m] - gap;
        rate += 2.0 * pi * g2 * matrix_element * matrix_element * (width / pi) / (x * x + width * width);
    }
    return rate;
}

double default_delta(double eps, double beta) { return std::pow(eps, 0.5 - (beta - 5.0 / 6.0) / 5.0); }

DressingParams make_dressing_params(double eps, double beta, std::optional<double> delta_override,
                                    std::optional<double> coupling_override, bool unsafe_beta) {
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
    if (!unsafe_beta && !(beta > 5.0 / 6.0 && beta <= 4.0 / 3.0))
        throw ValidationError("beta = " + std::to_string(beta) + " outside (5/6, 4/3]; pass --unsafe-beta");
    DressingParams p;
    p.eps = eps;
    p.beta = beta;
    p.unsafe_beta = unsafe_beta;
    p.delta = delta_override ? *delta_override : default_delta(eps, beta);
    if (!(p.delta > 0.0)) throw ValidationError("delta must be positive");
    if (p.delta < std::sqrt(eps) * (1.0 - 1e-12) && !unsafe_beta)
        throw ValidationError("delta = " + std::to_string(p.delta) + " below sqrt(eps)");
    p.coupling = coupling_override ? *coupling_override : std::pow(eps, 1.5 * beta);
    return p;
}

double apply_H1(const CouplingOperator& c, int n, int d, const CVec& in, CVec& out) {
    const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
    const int modes = static_cast<int>(c.g.size());
    if (in.size() != nd * (modes + 1)) throw DimensionMismatch("dressed vector length does not match coupling");
    out.setZero(in.size());
    CVec cv(nd);
    c.c.apply(in.data(), cv.data());
    CVec acc = CVec::Zero(nd);
    double dropped = 0.0;
    CVec tmp(nd);
    for (int m = 0; m < modes; ++m) {
        out.segment((m + 1) * nd, nd) = c.g[m] * cv;
        const auto seg = in.segment((m + 1) * nd, nd);
        acc += c.g[m] * seg;
        c.c.apply(seg.data(), tmp.data());
        dropped += tmp.squaredNorm();
    }
    c.c_adj.apply(acc.data(), out.data());
    return dropped * c.g.squaredNorm();
}

DressedState apply_H1(const DressedState& s, const CouplingOperator& c, double* dropped) {
    DressedState out = s;
    const double w = apply_H1(c, s.n_points, s.dim, s.amp, out.amp);
    if (dropped) *dropped = w;
    spdlog::debug("H_1: dropped two-photon weight {:.3e}", w);
    return out;
}

DressedHamiltonian::DressedHamiltonian(MolecularOperator h, CouplingOperator c, PhotonModes modes, double coupling,
                                       double a2_proxy)
    : h_(std::move(h)), c_(std::move(c)), modes_(std::move(modes)), g_(coupling), a2_(a2_proxy) {}

void DressedHamiltonian::apply(const CVec& in, CVec& out) const {
    const Eigen::Index nd = block();
    if (in.size() != size()) throw DimensionMismatch("dressed vector length does not match Hamiltonian");
    out.resize(in.size());
    CVec seg(nd), res(nd);
    for (int s = 0; s < sectors(); ++s) {
        seg = in.segment(s * nd, nd);
        h_.apply(seg, res);
        if (s > 0) res += modes_.k[s - 1] * seg;
        out.segment(s * nd, nd) = res;
    }
    if (g_ != 0.0) {
        CVec h1;
        dropped_ = g_ * g_ * apply_H1(c_, h_.n(), h_.dim(), in, h1);
        out += g_ * h1;
    }
    if (a2_ != 0.0) out += (a2_ * g_ * g_ * c_.g.squaredNorm()) * in;
}

CVec DressedHamiltonian::apply(const CVec& in) const {
    CVec out;
    apply(in, out);
    return out;
}

MatVec DressedHamiltonian::matvec() const {
    return [this](const CVec& x, CVec& y) { apply(x, y); };
}

TDelta::TDelta(const FiberField& h_el, const BandData& band, const CouplingOperator& c, const PhotonModes& modes,
               double delta, const Spectral& sp)
    : n_(h_el.n()), d_(h_el.dim), m_(modes.count()), delta_(delta) {
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    phi_ = band.periodic_vectors();
    t_.resize(n_, static_cast<Eigen::Index>(m_) * d_);
    dt_.resize(n_, t_.cols());
    dphi_.resize(n_, d_);
    for (int col = 0; col < d_; ++col) dphi_.col(col) = sp.derivative(CVec(phi_.col(col)), 1);
    const FiberField dh = h_el.derivative(sp, 1);
    const FiberField dc = c.c.derivative(sp, 1);
    const CVec de = sp.derivative(CVec(band.energies.cast<cplx>()), 1);
    const int j = band.index;
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int x = 0; x < n_; ++x) {
        es.compute(h_el[x]);
        const CMat& v = es.eigenvectors();
        const RVec& lam = es.eigenvalues();
        const CVec phi = phi_.row(x).transpose();
        const CVec cphi = c.c[x] * phi;
        const CVec dcphi = dc[x] * phi + c.c[x] * dphi_.row(x).transpose();
        const CMat dhe = dh[x] - de[x].real() * CMat::Identity(d_, d_);
        const CVec y = v.adjoint() * cphi;
        for (int m = 0; m < m_; ++m) {
            CVec inv(d_);
            for (int l = 0; l < d_; ++l) inv[l] = 1.0 / cplx(modes.k[m] + lam[l] - lam[j], delta);
            const CVec tm = -c.g[m] * (v * inv.cwiseProduct(y));
            const CVec rhs = c.g[m] * dcphi + dhe * tm;
            const CVec dtm = -(v * inv.cwiseProduct(v.adjoint() * rhs));
            t_.block(x, static_cast<Eigen::Index>(m) * d_, 1, d_) = tm.transpose();
            dt_.block(x, static_cast<Eigen::Index>(m) * d_, 1, d_) = dtm.transpose();
        }
    }
}

CVec TDelta::apply(const CVec& vac) const {
    const Eigen::Index nd = static_cast<Eigen::Index>(n_) * d_;
    if (vac.size() != nd) throw DimensionMismatch("T_delta expects a molecular vector");
    CVec out = CVec::Zero(nd * (m_ + 1));
    for (int x = 0; x < n_; ++x) {
        cplx a = 0.0;
        for (int c = 0; c < d_; ++c) a += std::conj(phi_(x, c)) * vac[c * n_ + x];
        if (a == 0.0) continue;
        for (int m = 0; m < m_; ++m)
            for (int c = 0; c < d_; ++c)
                out[(m + 1) * nd + c * n_ + x] = t_(x, static_cast<Eigen::Index>(m) * d_ + c) * a;
    }
    return out;
}

CVec TDelta::apply_adjoint(const CVec& dressed) const {
    const Eigen::Index nd = static_cast<Eigen::Index>(n_) * d_;
    if (dressed.size() != nd * (m_ + 1)) throw DimensionMismatch("T_delta^* expects a dressed vector");
    CVec out(nd);
    for (int x = 0; x < n_; ++x) {
        cplx s = 0.0;
        for (int m = 0; m < m_; ++m)
            for (int c = 0; c < d_; ++c)
                s += std::conj(t_(x, static_cast<Eigen::Index>(m) * d_ + c)) * dressed[(m + 1) * nd + c * n_ + x];
        for (int c = 0; c < d_; ++c) out[c * n_ + x] = phi_(x, c) * s;
    }
    return out;
}

RVec TDelta::fiber_norms() const { return t_.rowwise().norm(); }

double TDelta::norm() const { return fiber_norms().maxCoeff(); }

double TDelta::gradient_norm() const {
    // d/dx (t phi^*) = dt phi^* + t dphi^*; its norm from the d x d Gram matrix.
    double best = 0.0;
    for (int x = 0; x < n_; ++x) {
        const CVec a = dt_.row(x).transpose();
        const CVec t = t_.row(x).transpose();
        const CVec phi = phi_.row(x).transpose();
        const CVec b = dphi_.row(x).transpose();
        const cplx aa = a.squaredNorm(), at = a.dot(t), tt = t.squaredNorm();
        CMat gram = phi * aa * phi.adjoint() + phi * at * b.adjoint() + b * std::conj(at) * phi.adjoint() +
                    b * tt * b.adjoint();
        gram = (0.5 * (gram + gram.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
        best = std::max(best, std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
    }
    return best;
}

DressedVacuum::DressedVacuum(const CMat& p_eps, const TDelta& t, double coupling)
    : t_(&t), g_(coupling), nd_(static_cast<Eigen::Index>(t.n()) * t.dim()) {
    if (p_eps.rows() != nd_) throw DimensionMismatch("projection size differs from the molecular space");
    const int n = t.n();
    const RVec tn = t.fiber_norms();
    const CMat& phi = t.band_vectors();
    CMat th = CMat::Zero(n, nd_);
    for (int x = 0; x < n; ++x)
        for (int c = 0; c < t.dim(); ++c) th(x, c * n + x) = tn[x] * std::conj(phi(x, c));
    pt_ = CMat::Zero(nd_ + n, nd_ + n);
    pt_.topLeftCorner(nd_, nd_) = 0.5 * (p_eps + p_eps.adjoint());
    pt_.bottomLeftCorner(n, nd_) = g_ * th;
    pt_.topRightCorner(nd_, n) = g_ * th.adjoint();
    q_ = purify(pt_);
}

CVec DressedVacuum::embed_vacuum(const CVec& vac) const {
    CVec r = CVec::Zero(pt_.rows());
    r.head(nd_) = vac;
    return r;
}

CVec DressedVacuum::expand(const CVec& reduced) const {
    const int n = t_->n(), d = t_->dim(), mm = t_->modes();
    const RVec tn = t_->fiber_norms();
    CVec out = CVec::Zero(nd_ * (mm + 1));
    out.head(nd_) = reduced.head(nd_);
    for (int x = 0; x < n; ++x) {
        if (tn[x] == 0.0) continue;
        const cplx a = reduced[nd_ + x] / tn[x];
        for (int m = 0; m < mm; ++m)
            for (int c = 0; c < d; ++c)
                out[(m + 1) * nd_ + c * n + x] = t_->vectors()(x, static_cast<Eigen::Index>(m) * d + c) * a;
    }
    return out;
}

double DressedVacuum::distance(const CVec& vac) const {
    const CVec r = embed_vacuum(vac);
    CVec base = CVec::Zero(r.size());
    base.head(nd_) = pt_.topLeftCorner(nd_, nd_) * vac;
    return (q_.q * r - base).norm();
}

double DressedVacuum::almost_defect(const CVec& vac) const {
    const CVec r = embed_vacuum(vac);
    const CVec p = pt_ * r;
    return (pt_ * p - p).norm();
}

double DressedVacuum::operator_distance() const {
    CMat base = CMat::Zero(pt_.rows(), pt_.cols());
    base.topLeftCorner(nd_, nd_) = pt_.topLeftCorner(nd_, nd_);
    return operator_norm(q_.q - base);
}

CVec dressed_commutator(const DressedHamiltonian& h, const CMat& p_eps, const TDelta& t, const CVec& psi) {
    const Eigen::Index nd = h.block();
    const double g = h.coupling();
    auto almost = [&](const CVec& v) {
        CVec out = g * t.apply(v.head(nd));
        out.head(nd) = p_eps * v.head(nd) + g * t.apply_adjoint(v);
        return out;
    };
    return h.apply(almost(psi)) - almost(h.apply(psi));
}

DressedScan commutator_dressed_scan(const ModelSpec& spec, const Grid1D& grid, const DressedScanOptions& opt) {
    const FiberField h_el = sample_hamiltonian(spec, grid);
    const FiberField mu = sample_dipole(spec, grid);
    const BandData band = diagonalize_band(h_el, opt.band_j);
    auto sp = std::make_shared<Spectral>(grid);
    const PhotonModes modes = build_modes(spec.lambda0, opt.modes, opt.scheme);
    const CouplingOperator coup = build_coupling(h_el, mu, modes);
    std::vector<ScalingPoint> dist, def, comm, resid;
    DressedScan out;
    for (double eps : opt.ladder) {
        const DressingParams prm = make_dressing_params(eps, opt.beta, opt.delta_override, {}, opt.unsafe_beta);
        const CMat p = purify(build_superadiabatic(h_el, band, eps, 2, sp).with_cutoff(opt.cutoff_energy)).q;
        const TDelta t(h_el, band, coup, modes, prm.delta, *sp);
        const DressedVacuum vac(p, t, prm.coupling);
        const DressedHamiltonian h(build_molecular_hamiltonian(h_el, eps, sp), coup, modes, prm.coupling);
        double wd = 0.0, wf = 0.0, wc = 0.0, wr = 0.0;
        for (const CVec& raw : low_energy_batch(grid, spec.dim, eps, opt.batch, &band)) {
            CVec psi = p * raw;
            psi /= psi.norm();
            wd = std::max(wd, vac.distance(psi));
            wf = std::max(wf, vac.almost_defect(psi));
            CVec full = CVec::Zero(h.size());
            full.head(h.block()) = psi;
            const CVec cm = dressed_commutator(h, p, t, full);
            const CVec lead = cplx(0.0, -prm.delta * prm.coupling) * t.apply(psi);
            wc = std::max(wc, cm.norm());
            wr = std::max(wr, (cm - lead).norm());
        }
        dist.push_back({eps, wd});
        def.push_back({eps, wf});
        comm.push_back({eps, wc});
        resid.push_back({eps, wr});
        out.delta.push_back(prm.delta);
    }
    out.distance = fit_scaling(dist, "dressed_distance");
    out.defect = fit_scaling(def, "dressed_defect");
    out.commutator = fit_scaling(comm, "dressed_commutator");
    out.residual = fit_scaling(resid, "dressed_commutator_residual");
    const double a = opt.delta_override ? 0.0 : 0.5 - (opt.beta - 5.0 / 6.0) / 5.0;
    out.expected_distance = 1.5 * opt.beta - 0.5 * a;
    out.expected_defect = 3.0 * opt.beta - a;
    out.expected_commutator = 1.5 * opt.beta + 0.5 * a;
    return out;
}

}  // namespace bornrad
