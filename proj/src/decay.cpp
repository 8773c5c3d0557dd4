#include "bornrad/decay.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "bornrad/errors.hpp"
#include "bornrad/superadiabatic.hpp"

namespace bornrad {

std::string to_string(DecayMethod m) {
    switch (m) {
        case DecayMethod::theorem2: return "theorem2";
        case DecayMethod::dyson: return "dyson";
        case DecayMethod::oracle: return "oracle";
        case DecayMethod::fgr_static: return "fgr-static";
    }
    return "unknown";
}

DecayMethod parse_method(const std::string& name) {
    if (name == "theorem2") return DecayMethod::theorem2;
    if (name == "dyson") return DecayMethod::dyson;
    if (name == "oracle") return DecayMethod::oracle;
    if (name == "fgr-static" || name == "fgr") return DecayMethod::fgr_static;
    throw ValidationError("unknown method '" + name + "'");
}

double fgr_static(double gap, double dipole, double alpha, double t) {
    if (!(gap > 0.0)) throw WrongSign("transition energy must be positive");
    const double p = 4.0 / 3.0 * alpha * alpha * alpha * gap * gap * gap * dipole * dipole * t;
    if (p > 0.5) spdlog::warn("OutOfLinearRegime: golden-rule probability {:.3f} exceeds 1/2", p);
    return p;
}

DecayCurve decay_probability(const BandData& band_i, const BandData& band_j, const FiberField& mu,
                             const CVec& psi0, double t, double eps, double prefactor, const SpectralPtr& sp,
                             const DecayOptions& opt) {
    if (opt.samples < 1) throw ValidationError("need at least one sample time");
    const int n = band_i.grid.n_points;
    const CMat vi = band_i.periodic_vectors();
    const CMat vj = band_j.periodic_vectors();
    RVec weight(n);
    for (int x = 0; x < n; ++x) {
        const CVec a = vi.row(x).transpose();
        const cplx dij = a.dot(mu[x] * vj.row(x).transpose());
        const double gap = band_j.energies[x] - band_i.energies[x];
        weight[x] = 4.0 / 3.0 * std::norm(dij) * gap * gap * gap;
    }
    // Nuclear amplitude of P_j psi0 and the band propagator eigenbasis.
    CVec c0 = CVec::Zero(n);
    for (int col = 0; col < band_j.dim; ++col)
        c0 += vj.col(col).conjugate().cwiseProduct(psi0.segment(static_cast<Eigen::Index>(col) * n, n));
    RVec lam;
    CMat vecs;
    if (opt.route == BandRoute::diagonal) {
        const BandPropagator bp(band_j, eps, *sp);
        lam = bp.eigenvalues();
        vecs = bp.eigenvectors();
    } else {
        const BoEffective bo = build_bo_effective(band_j, eps, sp, opt.born_huang);
        Eigen::SelfAdjointEigenSolver<CMat> es(bo.dense());
        lam = es.eigenvalues();
        vecs = es.eigenvectors();
    }
    const CVec c0h = vecs.adjoint() * c0;
    auto rate = [&](double s) {
        CVec a(n);
        for (int q = 0; q < n; ++q) a[q] = std::exp(cplx(0.0, -s / eps * lam[q])) * c0h[q];
        const CVec c = vecs * a;
        return weight.dot(c.cwiseAbs2());
    };

    DecayCurve curve;
    curve.method = DecayMethod::theorem2;
    const int samples = opt.samples;
    for (int k = 0; k <= samples; ++k) curve.times.push_back(t * k / samples);
    std::vector<double> prev;
    double change = 0.0;
    for (int level = 0, q = 2; level <= opt.max_doublings; ++level, q *= 2) {
        const long panels = static_cast<long>(samples) * 2 * q;
        const double h = t / panels;
        std::vector<double> f(panels + 1);
        for (long p = 0; p <= panels; ++p) f[p] = rate(p * h);
        std::vector<double> cum(samples + 1, 0.0);
        for (int k = 1; k <= samples; ++k) {
            double s = 0.0;
            const long base = static_cast<long>(k - 1) * 2 * q;
            for (long p = 0; p < 2 * q; p += 2)
                s += f[base + p] + 4.0 * f[base + p + 1] + f[base + p + 2];
            cum[k] = cum[k - 1] + s * h / 3.0;
        }
        if (!prev.empty()) {
            change = 0.0;
            const double scale = std::max(std::abs(cum.back()), 1e-300);
            for (int k = 0; k <= samples; ++k) change = std::max(change, std::abs(cum[k] - prev[k]) / scale);
        }
        prev = std::move(cum);
        if (level > 0 && change < opt.tol) break;
        if (t == 0.0) break;
    }
    if (change > opt.fail_tol)
        throw QuadratureNotConverged("Simpson quadrature changed by " + std::to_string(change) + " on doubling");
    for (double v : prev) curve.probability.push_back(prefactor * v);
    curve.note = opt.route == BandRoute::diagonal ? "diagonal" : "bo";
    return curve;
}

double dressed_norm_estimate(const DressedHamiltonian& h) {
    const MolecularOperator& m = h.molecular();
    double el = 0.0;
    for (int x = 0; x < m.n(); ++x) el = std::max(el, m.fiber()[x].norm());
    double cn = 0.0;
    for (int x = 0; x < m.n(); ++x) cn = std::max(cn, h.coupling_operator().c[x].norm());
    return m.kinetic_symbol().maxCoeff() + el + h.modes().lambda0 +
           std::abs(h.coupling()) * cn * h.coupling_operator().g.norm();
}

DecayCurve oracle_transition(const DressedHamiltonian& h, const FiberField& bare, const CMat* q, const CVec& psi0,
                             double t, const OracleOptions& opt) {
    if (h.size() > opt.max_state_dim)
        throw BudgetExceeded("dressed state dimension " + std::to_string(h.size()) + " exceeds " +
                             std::to_string(opt.max_state_dim));
    const double eps = h.molecular().eps();
    const double tau = std::abs(t) / eps;
    const double est = opt.krylov.max_dim * (dressed_norm_estimate(h) * tau / (0.25 * opt.krylov.max_dim) + opt.samples);
    if (static_cast<double>(h.size()) * est > opt.max_work)
        throw BudgetExceeded("estimated oracle work " + std::to_string(h.size() * est) + " exceeds budget");
    if (!q && opt.beta >= 1.0)
        spdlog::warn("oracle uses the bare band projection at beta = {}; the purified projection is advised", opt.beta);
    if (psi0.size() != h.block()) throw DimensionMismatch("initial state must be a molecular vector");

    const Eigen::Index nd = h.block();
    CVec psi = CVec::Zero(h.size());
    psi.head(nd) = psi0;
    const double n0 = psi.norm();
    auto population = [&](const CVec& v) {
        double p = 0.0;
        for (int s = 0; s < h.sectors(); ++s) {
            const CVec seg = v.segment(s * nd, nd);
            p += (q ? CVec(*q * seg) : bare.apply(seg)).squaredNorm();
        }
        return p;
    };
    DecayCurve curve;
    curve.method = DecayMethod::oracle;
    curve.times.push_back(0.0);
    curve.probability.push_back(population(psi));
    KrylovStats stats;
    CVec scratch;
    for (int k = 1; k <= opt.samples; ++k) {
        const double dt = t / opt.samples;
        psi = krylov_expm(h.matvec(), psi, dt / eps, opt.krylov, &stats);
        curve.times.push_back(k * dt);
        curve.probability.push_back(population(psi));
        curve.norm_drift = std::max(curve.norm_drift, std::abs(psi.norm() - n0));
        h.apply(psi, scratch);
        curve.dropped_weight = std::max(curve.dropped_weight, h.last_dropped());
    }
    spdlog::debug("oracle: {} substeps, {} matvecs, drift {:.2e}", stats.substeps, stats.matvecs, curve.norm_drift);
    curve.note = q ? "purified" : "bare";
    return curve;
}

bool decreasing_up_to(const std::vector<double>& v, int inversions) {
    int inv = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] >= v[i - 1]) ++inv;
    return inv <= inversions;
}

Comparison compare_methods(const ModelSpec& spec, const Grid1D& grid, const CompareOptions& opt) {
    const FiberField h_el = sample_hamiltonian(spec, grid);
    const FiberField mu = sample_dipole(spec, grid);
    const BandData bi = diagonalize_band(h_el, spec.band_i);
    const BandData bj = diagonalize_band(h_el, spec.band_j);
    auto sp = std::make_shared<Spectral>(grid);
    const RVec gaps = bj.energies - bi.energies;
    const PhotonModes modes = build_modes(spec.lambda0, opt.modes, opt.scheme, &gaps);
    const CouplingOperator coup = build_coupling(h_el, mu, modes);
    const bool purified = opt.oracle.purified || opt.beta >= 1.0;

    std::vector<DressingParams> params;
    for (double eps : opt.ladder)
        params.push_back(
            make_dressing_params(eps, opt.beta, opt.delta_override, opt.coupling_override, opt.unsafe_beta));
    if (opt.run_oracle) {
        // Budget precheck for the whole ladder before any propagation.
        for (const auto& prm : params) {
            const DressedHamiltonian h(build_molecular_hamiltonian(h_el, prm.eps, sp), coup, modes, prm.coupling);
            const double est = opt.oracle.krylov.max_dim *
                               (dressed_norm_estimate(h) * opt.t / prm.eps / (0.25 * opt.oracle.krylov.max_dim) +
                                opt.oracle.samples);
            if (h.size() > opt.oracle.max_state_dim || h.size() * est > opt.oracle.max_work)
                throw BudgetExceeded("oracle at eps = " + std::to_string(prm.eps) + " exceeds the budget");
        }
    }

    Comparison out;
    for (const auto& prm : params) {
        const double eps = prm.eps;
        ComparisonRow row;
        row.eps = eps;
        const CMat qj = purify(build_superadiabatic(h_el, bj, eps, 2, sp).with_cutoff(opt.cutoff_energy)).q;
        CVec psi0 = qj * product_state(gaussian_packet(grid, opt.packet, eps), bj.periodic_vectors());
        psi0 /= psi0.norm();
        const double pref = prm.coupling * prm.coupling / eps;
        row.theorem2 = decay_probability(bi, bj, mu, psi0, opt.t, eps, pref, sp, opt.decay).final_value();
        if (opt.run_dyson) {
            const BandPropagator pi(bi, eps, *sp), pj(bj, eps, *sp);
            const TransitionOperator op =
                build_transition_operator(bi, bj, mu, modes, eps, prm.delta, opt.with_t2, *sp);
            row.dyson = dyson_transition(op, pi, pj, modes, psi0, opt.t, prm.coupling, *sp, opt.dyson).probability;
            row.dev_dyson = std::abs(row.dyson - row.theorem2) / row.theorem2;
        }
        if (opt.run_oracle) {
            const DressedHamiltonian h(build_molecular_hamiltonian(h_el, eps, sp), coup, modes, prm.coupling);
            CMat qi;
            if (purified) qi = purify(build_superadiabatic(h_el, bi, eps, 2, sp).with_cutoff(opt.cutoff_energy)).q;
            OracleOptions oo = opt.oracle;
            oo.beta = opt.beta;
            const DecayCurve c = oracle_transition(h, bi.projector, purified ? &qi : nullptr, psi0, opt.t, oo);
            row.oracle = c.final_value();
            row.dev_oracle = std::abs(row.oracle - row.theorem2) / row.theorem2;
        }
        spdlog::info("compare eps={:.5f}: theorem2 {:.4e} dyson {:.4e} oracle {:.4e}", eps, row.theorem2, row.dyson,
                     row.oracle);
        out.rows.push_back(row);
    }
    std::vector<double> dev_o, dev_d;
    std::vector<ScalingPoint> pts;
    for (const auto& r : out.rows) {
        dev_o.push_back(r.dev_oracle);
        dev_d.push_back(r.dev_dyson);
        if (r.dev_oracle > 0.0) pts.push_back({r.eps, r.dev_oracle});
    }
    out.oracle_monotone = opt.run_oracle && decreasing_up_to(dev_o, 1);
    out.dyson_monotone = opt.run_dyson && decreasing_up_to(dev_d, 1);
    if (pts.size() >= 3) out.oracle_deviation = fit_scaling(pts, "oracle_deviation");
    return out;
}

}  // namespace bornrad
