#include <doctest.h>

#include <cmath>

#include "bornrad/errors.hpp"
#include "bornrad/transition.hpp"

using namespace bornrad;

namespace {

RotationParams smooth_rotation() {
    RotationParams p;
    p.half_gap = 0.5;
    p.gap_mod = 0.15;
    p.theta_amp = 0.3;
    p.lambda0 = 2.6;
    return p;
}

struct Constant {
    Grid1D g;
    SpectralPtr sp;
    FiberField h, mu;
    BandData b0, b1;
    explicit Constant(int n)
        : g(make_grid(n, 2 * pi)),
          sp(std::make_shared<Spectral>(g)),
          h(sample_hamiltonian(constant_model({0.0, 1.0}, pauli_x(), 2.0), g)),
          mu(sample_dipole(constant_model({0.0, 1.0}, pauli_x(), 2.0), g)),
          b0(diagonalize_band(h, 0)),
          b1(diagonalize_band(h, 1)) {}
};

}  // namespace

TEST_CASE("photon modes: validation and quadrature") {
    CHECK_THROWS_AS(build_modes(2.0, 4, QuadratureScheme::midpoint), ValidationError);
    CHECK_THROWS_AS(build_modes(0.0, 16, QuadratureScheme::midpoint), ValidationError);
    RVec gap(1);
    gap[0] = (3 + 0.5) * 2.0 / 16;  // midpoint node m = 3 for lambda0 = 2, M = 16
    CHECK_THROWS_AS(build_modes(2.0, 16, QuadratureScheme::midpoint, &gap), ResonantMode);
    CHECK_THROWS_AS(parse_scheme("simpson"), ValidationError);
    const PhotonModes mid = build_modes(2.0, 64, QuadratureScheme::midpoint);
    const PhotonModes gl = build_modes(2.0, 16, parse_scheme("gauss-legendre"));
    CHECK(mid.w.sum() == doctest::Approx(2.0));
    CHECK(gl.w.sum() == doctest::Approx(2.0));
    // Gauss-Legendre with 16 nodes integrates k^9 exactly: 2^10 / 10.
    double s = 0.0;
    for (int m = 0; m < 16; ++m) s += gl.w[m] * std::pow(gl.k[m], 9);
    CHECK(s == doctest::Approx(102.4).epsilon(1e-12));
}

TEST_CASE("velocity-form coupling matrix elements") {
    RotationParams p = smooth_rotation();
    p.phase_amp = 0.4;
    const auto spec = rotation_model(p);
    const Grid1D g = make_grid(64, 2 * pi);
    const FiberField h = sample_hamiltonian(spec, g), mu = sample_dipole(spec, g);
    const BandData b0 = diagonalize_band(h, 0), b1 = diagonalize_band(h, 1);
    const PhotonModes modes = build_modes(2.6, 32, QuadratureScheme::midpoint);
    const CouplingOperator c = build_coupling(h, mu, modes);
    const CVec d = dipole_elements(b0, b1, mu);
    for (int x = 0; x < 64; ++x) {
        const cplx cij = b0.vector(x).dot(c.c[x] * b1.vector(x));
        CHECK(std::abs(cij - I * (b0.energies[x] - b1.energies[x]) * d[x]) < 1e-11);
        CHECK((c.c_adj[x] - c.c[x].adjoint()).norm() == 0.0);
    }
    for (int m = 0; m < 32; ++m) CHECK(c.g[m] * c.g[m] == doctest::Approx(2.0 / (3 * pi) * modes.k[m] * modes.w[m]));
}

TEST_CASE("discrete golden-rule rate converges to (4/3) dE^3 |D|^2") {
    const PhotonModes m512 = build_modes(2.0, 512, QuadratureScheme::midpoint);
    const double r512 = discrete_golden_rule_rate(m512, 1.0, 1.0);
    CHECK(std::abs(r512 - 4.0 / 3.0) / (4.0 / 3.0) <= 0.01);
    double prev = 1.0;
    for (int m : {64, 128, 256, 512, 1024}) {
        const double err = std::abs(discrete_golden_rule_rate(build_modes(2.0, m, QuadratureScheme::midpoint), 1.0, 1.0) -
                                    4.0 / 3.0);
        CHECK(err < prev);
        prev = err;
    }
    // dE^3 |D|^2 scaling through |C_ij| = dE |D|.
    const double de = 0.7, dd = 0.4;
    const double r = discrete_golden_rule_rate(build_modes(2.0, 2048, QuadratureScheme::midpoint), de, de * dd);
    CHECK(r == doctest::Approx(4.0 / 3.0 * de * de * de * dd * dd).epsilon(0.01));
}

TEST_CASE("Wigner-Weisskopf decay of the truncated model") {
    // Excited level coupled to M modes; the survival probability decays with the
    // golden-rule rate between the transient and the recurrence time 2 pi M / Lambda0.
    const int M = 512;
    const double lambda0 = 2.0, gap = 1.0, coupling2 = 0.015;
    const PhotonModes modes = build_modes(lambda0, M, QuadratureScheme::midpoint);
    CMat h = CMat::Zero(M + 1, M + 1);
    h(0, 0) = gap;
    for (int m = 0; m < M; ++m) {
        h(m + 1, m + 1) = modes.k[m];
        const double v = std::sqrt(coupling2 * coupling_density(modes.k[m]) * modes.w[m]) * gap;  // |C| = dE |D|
        h(0, m + 1) = v;
        h(m + 1, 0) = v;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const CVec c0 = es.eigenvectors().row(0).adjoint();
    auto survival = [&](double tau) {
        cplx a = 0.0;
        for (int q = 0; q <= M; ++q) a += std::norm(c0[q]) * std::exp(cplx(0, -tau * es.eigenvalues()[q]));
        return std::norm(a);
    };
    const double t1 = 40.0, t2 = 160.0;
    const double rate = std::log(survival(t1) / survival(t2)) / (t2 - t1);
    CHECK(rate == doctest::Approx(coupling2 * 4.0 / 3.0).epsilon(0.03));
}

TEST_CASE("dressing parameters") {
    CHECK(default_delta(1.0 / 64, 1.0) == doctest::Approx(std::pow(1.0 / 64, 0.5 - 1.0 / 30)));
    CHECK_THROWS_AS(make_dressing_params(1.0 / 32, 0.5), ValidationError);
    CHECK_THROWS_AS(make_dressing_params(1.0 / 32, 1.4), ValidationError);
    CHECK_NOTHROW(make_dressing_params(1.0 / 32, 4.0 / 3.0));
    CHECK_NOTHROW(make_dressing_params(1.0 / 32, 0.5, {}, {}, true));
    CHECK_THROWS_AS(make_dressing_params(1.0 / 16, 1.0, 0.1), ValidationError);
    const DressingParams p = make_dressing_params(1.0 / 16, 1.2);
    CHECK(p.coupling == doctest::Approx(std::pow(1.0 / 16, 1.8)));
    CHECK(make_dressing_params(1.0 / 16, 1.0, {}, 0.01).coupling == 0.01);
}

TEST_CASE("dressed Hamiltonian is Hermitian and reports dropped two-photon weight") {
    Constant f(8);
    const PhotonModes modes = build_modes(2.0, 8, QuadratureScheme::midpoint);
    const DressedHamiltonian h(build_molecular_hamiltonian(f.h, 0.1, f.sp), build_coupling(f.h, f.mu, modes), modes,
                               0.2);
    const CMat m = dense_from_matvec(h.matvec(), h.size());
    CHECK((m - m.adjoint()).norm() < 1e-12);
    CVec v = CVec::Zero(h.size());
    v[h.block() + 3] = 1.0;  // one photon in mode 0, lower level
    h.apply(v);
    CHECK(h.last_dropped() > 0.0);
    CVec vac = CVec::Zero(h.size());
    vac[3] = 1.0;
    h.apply(vac);
    CHECK(h.last_dropped() == 0.0);
}

TEST_CASE("T_delta closed form on the constant model") {
    // t_m = i g_m / (k_m - dE + i delta) on the lower level, so
    // ||T|| = sqrt(sum_m g_m^2 / ((k_m - 1)^2 + delta^2)) and grad T = 0.
    Constant f(16);
    const PhotonModes modes = build_modes(2.0, 64, QuadratureScheme::midpoint);
    const CouplingOperator c = build_coupling(f.h, f.mu, modes);
    const double delta = 0.2;
    const TDelta t(f.h, f.b1, c, modes, delta, *f.sp);
    double ref = 0.0;
    for (int m = 0; m < 64; ++m) ref += c.g[m] * c.g[m] / ((modes.k[m] - 1) * (modes.k[m] - 1) + delta * delta);
    CHECK(t.norm() == doctest::Approx(std::sqrt(ref)).epsilon(1e-12));
    CHECK(t.gradient_norm() < 1e-10);
    // Adjoint pairing on random vectors.
    const CVec u = CVec::Random(32), w = CVec::Random(32 * 65);
    CHECK(std::abs(w.dot(t.apply(u)) - t.apply_adjoint(w).dot(u)) < 1e-12);
}

TEST_CASE("dressed commutator: leading term is -i delta g T") {
    // For the constant model with P = P0 the O(g) part of [H, P (x) Q0 + g(T + T*)]
    // on Ran(P (x) Q0) is exactly -i delta g T psi; the rest is O(g^2).
    Constant f(32);
    const double eps = 1.0 / 16, delta = 0.3;
    const PhotonModes modes = build_modes(2.0, 32, QuadratureScheme::midpoint);
    const CouplingOperator c = build_coupling(f.h, f.mu, modes);
    const TDelta t(f.h, f.b1, c, modes, delta, *f.sp);
    CMat p0(64, 64);
    for (int col = 0; col < 64; ++col) p0.col(col) = f.b1.projector.apply(CVec(CVec::Unit(64, col)));
    const CVec vac = f.b1.projector.apply(product_state(gaussian_packet(f.g, {1.0, 0.5, 0.5}, eps), CVec(CVec::Ones(2))))
                         .normalized();
    CVec psi = CVec::Zero(64 * 33);
    psi.head(64) = vac;
    std::vector<double> res;
    for (double g : {0.02, 0.01}) {
        const DressedHamiltonian h(build_molecular_hamiltonian(f.h, eps, f.sp), c, modes, g);
        const CVec lead = cplx(0, -delta * g) * t.apply(vac);
        res.push_back((dressed_commutator(h, p0, t, psi) - lead).norm());
    }
    CHECK(std::log2(res[0] / res[1]) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("band propagator: exact band block") {
    Constant f(32);
    const double eps = 1.0 / 8;
    const BandPropagator bp(f.b1, eps, *f.sp);
    CHECK((bp.matrix() - bp.matrix().adjoint()).norm() < 1e-12);
    // Constant fiber: the spectrum is eps^2 k^2 + 1 on the grid wavenumbers.
    RVec ref = (eps * eps) * f.sp->k().cwiseAbs2().array() + 1.0;
    std::sort(ref.data(), ref.data() + ref.size());
    CHECK((bp.eigenvalues() - ref).cwiseAbs().maxCoeff() < 1e-10);
    const CVec c0 = gaussian_packet(f.g, {1.0, 0.5, 0.5}, eps);
    CHECK((bp.evolve(bp.evolve(c0, 0.3), -0.3) - c0).norm() < 1e-12);
    CHECK((bp.coefficients(bp.embed(c0)) - c0).norm() < 1e-12);
}

TEST_CASE("transition operator requires E_j > E_i") {
    Constant f(16);
    const PhotonModes modes = build_modes(2.0, 16, QuadratureScheme::midpoint);
    CHECK_THROWS_AS(build_transition_operator(f.b1, f.b0, f.mu, modes, 0.1, 0.4, false, *f.sp), WrongSign);
}

TEST_CASE("Dyson amplitude on the constant model: finite-delta law") {
    // Lorentzian-weighted sinc integral: norm^2 / ((4/3) dE^3 |D|^2 t) tends to
    // 1 - (1 - exp(-delta T)) / (delta T), T = t / eps, for a flat transition energy.
    Constant f(32);
    const double eps = 1.0 / 32, t = 0.5, delta = 0.2;
    const PhotonModes modes = build_modes(2.0, 2048, QuadratureScheme::midpoint);
    const BandPropagator pi(f.b0, eps, *f.sp), pj(f.b1, eps, *f.sp);
    const auto op = build_transition_operator(f.b0, f.b1, f.mu, modes, eps, delta, false, *f.sp);
    const CVec psi0 = product_state(gaussian_packet(f.g, {1.0, 0.5, 0.5}, eps), f.b1.periodic_vectors()).normalized();
    const DysonResult r = dyson_transition(op, pi, pj, modes, psi0, t, 1.0, *f.sp);
    const double T = t / eps;
    const double ratio = 1.0 - (1.0 - std::exp(-delta * T)) / (delta * T);
    CHECK(r.norm2 / (4.0 / 3.0 * t) == doctest::Approx(ratio).epsilon(0.03));
    CHECK(r.doubling_change < 0.01);
    CHECK(r.probability == doctest::Approx(r.norm2 / eps));
}
