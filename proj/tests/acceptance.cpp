// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "bornrad/config.hpp"
#include "bornrad/decay.hpp"
#include "bornrad/dressed.hpp"
#include "bornrad/superadiabatic.hpp"
#include "bornrad/transition.hpp"

using namespace bornrad;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

RotationParams twisted() {
    RotationParams p;
    p.half_gap = 0.5;
    p.gap_mod = 0.15;
    p.phase_amp = 0.4;
    p.phase_amp2 = 0.2;
    p.lambda0 = 2.6;
    return p;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Constant fiber, clamped nuclei: oracle slope over microscopic t in [2, 20].
Outcome clamped_golden_rule() {
    const ModelSpec spec = constant_model({0.0, 1.0}, pauli_x(), 2.0);
    const Grid1D g = make_grid(64, 2 * pi);
    const double eps = 1.0 / 32;
    const auto sp = std::make_shared<Spectral>(g);
    const FiberField h = sample_hamiltonian(spec, g), mu = sample_dipole(spec, g);
    const BandData bi = diagonalize_band(h, 0), bj = diagonalize_band(h, 1);
    const RVec gaps = bj.energies - bi.energies;
    const PhotonModes modes = build_modes(spec.lambda0, 256, QuadratureScheme::midpoint, &gaps);
    const DressingParams prm = make_dressing_params(eps, 1.0);
    const DressedHamiltonian hd(build_molecular_hamiltonian(h, eps, sp), build_coupling(h, mu, modes), modes,
                                prm.coupling);
    const CVec psi0 = product_state(gaussian_packet(g, {1.0, 0.0, 0.5}, eps), bj.periodic_vectors()).normalized();
    OracleOptions o;
    o.samples = 40;
    const DecayCurve c = oracle_transition(hd, bi.projector, nullptr, psi0, 20 * eps, o);
    std::vector<double> tau, p;
    for (size_t k = 0; k < c.times.size(); ++k)
        if (c.times[k] / eps >= 2 - 1e-9) {
            tau.push_back(c.times[k] / eps);
            p.push_back(c.probability[k]);
        }
    const double alpha = std::cbrt(prm.coupling * prm.coupling);
    const double ref = 4.0 / 3.0 * alpha * alpha * alpha;  // dE = |D| = 1
    const double rel = fit_slope(tau, p) / ref - 1;
    return {std::abs(rel) <= 0.10, fmt::format("slope/FGR - 1 = {:+.4f} (tol 0.10)", rel)};
}

// Moving nuclei: oracle vs theorem2 at t = 0.5 along eps = 1/8, 1/16, 1/32.
Outcome theorem2_vs_oracle() {
    RotationParams rp;
    rp.half_gap = 0.5;
    rp.gap_mod = 0.15;
    rp.theta_amp = 0.3;
    rp.lambda0 = 2.6;
    CompareOptions o;
    o.ladder = {1.0 / 8, 1.0 / 16, 1.0 / 32};
    o.modes = 128;
    o.t = 0.5;
    o.run_dyson = false;
    const Comparison cmp = compare_methods(rotation_model(rp), make_grid(256, 2 * pi), o);
    std::vector<double> dev;
    std::string d = "deviations";
    for (const auto& r : cmp.rows) {
        dev.push_back(r.dev_oracle);
        d += fmt::format(" {:.4f}", r.dev_oracle);
    }
    const bool pass = decreasing_up_to(dev, 0) && dev.back() <= 0.20;
    return {pass, d + " (strictly decreasing, last <= 0.20)"};
}

Outcome adiabatic_exponent() {
    AdiabaticScanOptions o;
    o.t = 1.0;
    const ScalingReport r = adiabatic_error_scan(rotation_model(twisted()), make_grid(256, 2 * pi), 1, o);
    const bool pass = within(r.exponent, 1.0, 0.3) && r.r_squared >= 0.95;
    return {pass, fmt::format("slope {:.3f} (1.0 +- 0.3), r^2 {:.4f} (>= 0.95)", r.exponent, r.r_squared)};
}

Outcome superadiabatic_exponents() {
    const ModelSpec spec = rotation_model(twisted());
    const Grid1D g = make_grid(256, 2 * pi);
    const SuperadiabaticScan s1 = commutator_scaling_scan(spec, g, 1, 1);
    const SuperadiabaticScan s2 = commutator_scaling_scan(spec, g, 1, 2);
    const ScalingReport orth = band_orthogonality_check(spec, g, 0, 1, 1);
    const bool pass = within(s1.defect.exponent, 2.0, 0.4) && within(s2.defect.exponent, 3.0, 0.4) &&
                      within(s2.commutator.exponent, 3.0, 0.4) && within(orth.exponent, 2.0, 0.4);
    return {pass, fmt::format("defect(P1) {:.3f} (2 +- 0.4), defect(P2) {:.3f} (3 +- 0.4), "
                              "commutator {:.3f} (3 +- 0.4), orthogonality {:.3f} (2 +- 0.4)",
                              s1.defect.exponent, s2.defect.exponent, s2.commutator.exponent, orth.exponent)};
}

Outcome tdelta_laws() {
    const ModelSpec spec = rotation_model(twisted());
    const Grid1D g = make_grid(128, 2 * pi);
    const Spectral sp(g);
    const FiberField h = sample_hamiltonian(spec, g), mu = sample_dipole(spec, g);
    const BandData band = diagonalize_band(h, 1);
    const PhotonModes modes = build_modes(spec.lambda0, 2048, QuadratureScheme::midpoint);
    const CouplingOperator c = build_coupling(h, mu, modes);
    std::vector<ScalingPoint> a, b;
    for (double d : {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32}) {
        const TDelta t(h, band, c, modes, d, sp);
        a.push_back({d, t.norm()});
        b.push_back({d, t.gradient_norm()});
    }
    const double sa = fit_scaling(a).exponent, sb = fit_scaling(b).exponent;
    return {within(sa, -0.5, 0.2) && within(sb, -1.5, 0.3),
            fmt::format("||T|| slope {:.3f} (-0.5 +- 0.2), ||grad T|| slope {:.3f} (-1.5 +- 0.3)", sa, sb)};
}

Outcome dressed_scalings() {
    const DressedScan s = commutator_dressed_scan(rotation_model(twisted()), make_grid(256, 2 * pi));
    const bool pass = within(s.distance.exponent, s.expected_distance, 0.4) &&
                      within(s.defect.exponent, s.expected_defect, 0.4);
    return {pass, fmt::format("distance {:.3f} (expected {:.3f} +- 0.4), defect {:.3f} (expected {:.3f} +- 0.4)",
                              s.distance.exponent, s.expected_distance, s.defect.exponent, s.expected_defect)};
}

Outcome invariants() {
    const ModelSpec spec = rotation_model(twisted());
    const Grid1D g = make_grid(64, 2 * pi);
    const auto sp = std::make_shared<Spectral>(g);
    const FiberField h = sample_hamiltonian(spec, g), mu = sample_dipole(spec, g);
    const BandData bi = diagonalize_band(h, 0), bj = diagonalize_band(h, 1);
    const double eps = 1.0 / 16;
    std::vector<std::string> bad;
    std::string d;

    // Unitarity of the Strang propagator.
    const MolecularOperator hm = build_molecular_hamiltonian(h, eps, sp);
    const CVec psi0 = product_state(gaussian_packet(g, {1.0, 0.5, 0.5}, eps), bj.periodic_vectors()).normalized();
    const double drift = std::abs(propagate_full(hm, psi0, 0.5).norm() - 1.0);
    if (drift > 1e-8) bad.push_back("unitarity");
    d += fmt::format("unitarity {:.1e}", drift);

    // Purified superadiabatic projection.
    const AlmostProjection qt = build_superadiabatic(h, bj, eps, 2, sp).with_cutoff(4.0);
    const Projection q = purify(qt);
    const double idem = idempotency_defect(q.q), herm = hermiticity_defect(q.q);
    if (idem > 1e-10 || herm > 1e-10) bad.push_back("projector");
    d += fmt::format(", idempotence {:.1e}, self-adjointness {:.1e}", idem, herm);

    // Purify bound on the first-order almost-projection.
    const AlmostProjection q1 = build_superadiabatic(h, bj, eps, 1, sp).with_cutoff(4.0);
    const CMat q1d = q1.dense();
    const Projection p1 = purify(q1);
    const double lhs = operator_norm(p1.q - q1d), rhs = idempotency_defect(q1d);
    if (lhs > rhs * (1 + 1e-9)) bad.push_back("purify bound");
    d += fmt::format(", purify {:.2e} <= {:.2e}", lhs, rhs);

    const double cd = commutator_dipole_identity(bi, bj, h, mu);
    if (cd > 1e-11) bad.push_back("commutator-dipole");
    d += fmt::format(", commutator-dipole {:.1e}", cd);

    // Gauge: |D_ij| and decay probabilities under a smooth regauge of both bands.
    RVec gamma(g.n_points);
    for (int k = 0; k < g.n_points; ++k) gamma[k] = 0.9 * std::sin(g.point(k)) + 0.4 * std::cos(2 * g.point(k)) - 0.3;
    const BandData ri = rephase(bi, -0.5 * gamma), rj = rephase(bj, gamma);
    const double dgauge =
        (dipole_elements(bi, bj, mu).cwiseAbs() - dipole_elements(ri, rj, mu).cwiseAbs()).cwiseAbs().maxCoeff();
    DecayOptions dopt;
    dopt.samples = 4;
    const double a = decay_probability(bi, bj, mu, psi0, 0.5, eps, 1.0, sp, dopt).final_value();
    const double b = decay_probability(ri, rj, mu, psi0, 0.5, eps, 1.0, sp, dopt).final_value();
    const PhotonModes modes = build_modes(spec.lambda0, 64, QuadratureScheme::midpoint);
    auto dyson = [&](const BandData& l, const BandData& u) {
        const BandPropagator pl(l, eps, *sp), pu(u, eps, *sp);
        const auto op = build_transition_operator(l, u, mu, modes, eps, 0.3, true, *sp);
        DysonOptions o;
        o.check_doubling = false;
        return dyson_transition(op, pl, pu, modes, psi0, 0.25, 1.0, *sp, o).norm2;
    };
    const double da = dyson(bi, bj), db = dyson(ri, rj);
    const double gt = std::abs(a - b) / a, gd = std::abs(da - db) / da;
    if (dgauge > 1e-10 || gt > 1e-10 || gd > 1e-10) bad.push_back("gauge");
    d += fmt::format(", gauge |D| {:.1e} theorem2 {:.1e} dyson {:.1e}", dgauge, gt, gd);

    // Determinism: byte-identical outputs for repeated runs.
    ExperimentConfig cfg = parse_config_text("task: decay\nmodel:\n  type: rotation\n  half_gap: 0.5\n"
                                             "  gap_mod: 0.15\ngrid:\n  n_points: 64\neps: 0.0625\nt: 0.25\n"
                                             "samples: 4\n");
    const RunRecord r1 = run(cfg), r2 = run(cfg);
    const bool same = format_csv(r1.config_hash, r1.rows) == format_csv(r2.config_hash, r2.rows) && r1.json == r2.json;
    if (!same) bad.push_back("determinism");
    d += same ? ", determinism ok" : ", determinism differs";

    std::string failed;
    for (const auto& s : bad) failed += " " + s;
    return {bad.empty(), d + (bad.empty() ? "" : "; failed:" + failed)};
}

Outcome coupling_normalization() {
    const double r = discrete_golden_rule_rate(build_modes(2.0, 512, QuadratureScheme::midpoint), 1.0, 1.0);
    const double rel = std::abs(r - 4.0 / 3.0) / (4.0 / 3.0);
    bool converging = true;
    double prev = 1.0;
    for (int m : {128, 256, 512, 1024}) {
        const double e =
            std::abs(discrete_golden_rule_rate(build_modes(2.0, m, QuadratureScheme::midpoint), 1.0, 1.0) - 4.0 / 3.0);
        converging = converging && e < prev;
        prev = e;
    }
    return {rel <= 0.01 && converging,
            fmt::format("M = 512 rel error {:.2e} (<= 0.01), error decreasing in M: {}", rel, converging)};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"clamped-nuclei golden rule", clamped_golden_rule},
        {"theorem2 vs oracle, moving nuclei", theorem2_vs_oracle},
        {"adiabatic exponent", adiabatic_exponent},
        {"superadiabatic exponents", superadiabatic_exponents},
        {"T_delta norm laws", tdelta_laws},
        {"dressed projection scalings", dressed_scalings},
        {"invariant suite", invariants},
        {"coupling normalization", coupling_normalization},
    };
    int failures = 0;
    for (size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("criterion %zu %s: %s: %s [%.1f s]\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                    o.detail.c_str(), s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
