#include <doctest.h>

#include <cmath>
#include <set>

#include "bornrad/bands.hpp"
#include "bornrad/errors.hpp"
#include "bornrad/expression.hpp"
#include "bornrad/krylov.hpp"
#include "bornrad/rng.hpp"
#include "bornrad/states.hpp"

using namespace bornrad;

namespace {

RotationParams twisted() {
    RotationParams p;
    p.half_gap = 0.5;
    p.gap_mod = 0.15;
    p.phase_amp = 0.4;
    p.phase_amp2 = 0.2;
    return p;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(make_grid(100, 1.0), ValidationError);
    CHECK_THROWS_AS(make_grid(2, 1.0), ValidationError);
    CHECK_THROWS_AS(make_grid(64, 0.0), ValidationError);
    const Grid1D g = make_grid(64, 2 * pi);
    CHECK(g.spacing() == doctest::Approx(2 * pi / 64));
}

TEST_CASE("spectral derivatives of a trigonometric polynomial") {
    const Grid1D g = make_grid(32, 2 * pi);
    const Spectral sp(g);
    CVec f(32), d1(32), d2(32);
    for (int k = 0; k < 32; ++k) {
        const double x = g.point(k);
        f[k] = std::sin(3 * x) + cplx(0, 1) * std::cos(x);
        d1[k] = 3 * std::cos(3 * x) - cplx(0, 1) * std::sin(x);
        d2[k] = -9 * std::sin(3 * x) - cplx(0, 1) * std::cos(x);
    }
    CHECK((sp.derivative(f, 1) - d1).norm() < 1e-12);
    CHECK((sp.derivative(f, 2) - d2).norm() < 1e-12);
}

TEST_CASE("odd derivative is anti-Hermitian on the grid") {
    const Grid1D g = make_grid(16, 3.0);
    const Spectral sp(g);
    CMat d(16, 16);
    for (int c = 0; c < 16; ++c) d.col(c) = sp.derivative(CVec(CVec::Unit(16, c)), 1);
    CHECK((d + d.adjoint()).norm() < 1e-12);
}

TEST_CASE("rotation model bands are v -+ e") {
    RotationParams p = twisted();
    p.shift_amp = 0.1;
    const auto spec = rotation_model(p);
    const Grid1D g = make_grid(64, p.length);
    const FiberField h = sample_hamiltonian(spec, g);
    const BandData b0 = diagonalize_band(h, 0), b1 = diagonalize_band(h, 1);
    for (int k = 0; k < 64; ++k) {
        const double x = g.point(k);
        const double e = p.half_gap + p.gap_mod * std::cos(x);
        const double v = p.shift_amp * std::sin(x);
        CHECK(b0.energies[k] == doctest::Approx(v - e).epsilon(1e-13));
        CHECK(b1.energies[k] == doctest::Approx(v + e).epsilon(1e-13));
    }
    CHECK(b1.gap == doctest::Approx(2 * (p.half_gap - p.gap_mod)).epsilon(1e-3));
    CHECK(eigen_residual(b1, h) < 1e-14);
}

TEST_CASE("degenerate and non-Hermitian fibers are rejected") {
    const Grid1D g = make_grid(16, 2 * pi);
    ModelSpec s = constant_model({0.0, 0.0, 1.0}, CMat::Identity(3, 3), 2.0);
    const FiberField h = sample_hamiltonian(s, g);
    CHECK_THROWS_AS(diagonalize_band(h, 0), DegenerateBand);
    CHECK_NOTHROW(diagonalize_band(h, 2));
    FiberField bad = h;
    bad[3](0, 2) = 0.5;
    CHECK_THROWS_AS(diagonalize_band(bad, 2), NonHermitianFiber);
    const BandData b = diagonalize_band(h, 2);
    CHECK_THROWS_AS(verify_gap(b, 2.0), GapViolation);
}

TEST_CASE("parallel transport: holonomy of a real rotation is trivial") {
    RotationParams p;
    const auto spec = rotation_model(p);
    const Grid1D g = make_grid(64, p.length);
    const BandData b = diagonalize_band(sample_hamiltonian(spec, g), 1);
    CHECK(std::abs(b.holonomy_phase()) < 1e-10);
    // Real fiber: the connection vanishes in the parallel-transport gauge.
    const Spectral sp(g);
    CHECK(berry_connection(b, sp).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gauge invariance of |D_ij| and covariance of the Berry connection") {
    const auto spec = rotation_model(twisted());
    const Grid1D g = make_grid(128, 2 * pi);
    const FiberField h = sample_hamiltonian(spec, g);
    const FiberField mu = sample_dipole(spec, g);
    const BandData b0 = diagonalize_band(h, 0), b1 = diagonalize_band(h, 1);
    RVec gamma(128);
    for (int k = 0; k < 128; ++k) gamma[k] = 0.7 * std::sin(g.point(k)) + 0.3 * std::cos(2 * g.point(k)) + 1.1;
    const BandData r1 = rephase(b1, gamma);
    const CVec d = dipole_elements(b0, b1, mu), dr = dipole_elements(b0, r1, mu);
    CHECK((d.cwiseAbs() - dr.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-10);
    const Spectral sp(g);
    const RVec a = berry_connection(b1, sp), ar = berry_connection(r1, sp);
    RVec dgamma(128);
    for (int k = 0; k < 128; ++k) dgamma[k] = 0.7 * std::cos(g.point(k)) - 0.6 * std::sin(2 * g.point(k));
    CHECK((ar - (a - dgamma)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("commutator-dipole identity") {
    const auto spec = rotation_model(twisted());
    const Grid1D g = make_grid(64, 2 * pi);
    const FiberField h = sample_hamiltonian(spec, g);
    const FiberField mu = sample_dipole(spec, g);
    const BandData b0 = diagonalize_band(h, 0), b1 = diagonalize_band(h, 1);
    CHECK(commutator_dipole_identity(b0, b1, h, mu) <= 1e-11);
}

TEST_CASE("expression language") {
    const Expression e("a * sin(x)^2 + cos(x) / 2 - 3e-1", {{"a", 2.0}});
    const double x = 0.4;
    CHECK(e(x) == doctest::Approx(2 * std::pow(std::sin(x), 2) + std::cos(x) / 2 - 0.3));
    CHECK(Expression("-2^2", {})(0.0) == doctest::Approx(-4.0));
    CHECK(Expression("sqrt(abs(x - 5))", {})(1.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(Expression("b * x", {}), ParseError);
    CHECK_THROWS_AS(Expression("sin(x", {}), ParseError);
    CHECK_THROWS_AS(Expression("1 +", {}), ParseError);
}

TEST_CASE("counter-based generator is keyed by seed and purpose") {
    CounterRng a(7, "batch"), b(7, "batch"), c(7, "other"), d(8, "batch");
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        seen.insert(x);
    }
    CHECK(seen.size() == 100);
    CHECK(c.next_u64() != CounterRng(7, "batch").next_u64());
    CHECK(d.next_u64() != CounterRng(7, "batch").next_u64());
    double mean = 0.0;
    CounterRng u(1, "u");
    for (int i = 0; i < 20000; ++i) mean += u.uniform();
    CHECK(mean / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("low-energy batches are reproducible and normalized") {
    const Grid1D g = make_grid(64, 2 * pi);
    BatchSpec spec{5, 1.0, 0.5, 3, "t"};
    const auto b1 = low_energy_batch(g, 2, 1.0 / 16, spec);
    const auto b2 = low_energy_batch(g, 2, 1.0 / 16, spec);
    REQUIRE(b1.size() == 5);
    for (size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1[i].norm() == doctest::Approx(1.0));
        CHECK((b1[i] - b2[i]).norm() == 0.0);
    }
}

TEST_CASE("checkpoint round trip") {
    MolecularState m{8, 2, CVec::Random(16)};
    const MolecularState m2 = decode_molecular(encode_state(m));
    CHECK(m2.n_points == 8);
    CHECK((m2.amp - m.amp).norm() == 0.0);
    DressedState d{8, 2, 3, CVec::Random(64)};
    const DressedState d2 = decode_dressed(encode_state(d));
    CHECK(d2.modes == 3);
    CHECK((d2.amp - d.amp).norm() == 0.0);
    std::string bytes = encode_state(m);
    CHECK_THROWS_AS(decode_dressed(bytes), ValidationError);
    bytes.pop_back();
    CHECK_THROWS_AS(decode_molecular(bytes), ValidationError);
}

TEST_CASE("Krylov exponential matches dense exponentiation") {
    const int n = 40;
    CMat a = CMat::Random(n, n);
    const CMat h = 0.5 * (a + a.adjoint());
    const CVec psi = CVec::Random(n).normalized();
    const double tau = 7.3;
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    CVec ph(n);
    for (int k = 0; k < n; ++k) ph[k] = std::exp(cplx(0, -tau * es.eigenvalues()[k]));
    const CVec ref = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint() * psi;
    const MatVec mv = [&](const CVec& x, CVec& y) { y = h * x; };
    const CVec out = krylov_expm(mv, psi, tau, {20, 1e-12, 100000});
    CHECK((out - ref).norm() < 1e-9);
    CHECK(std::abs(out.norm() - 1.0) < 1e-12);
    CHECK((dense_from_matvec(mv, n) - h).norm() < 1e-12);
}
