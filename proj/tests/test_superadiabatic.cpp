#include <doctest.h>

#include <cmath>

#include "bornrad/errors.hpp"
#include "bornrad/rng.hpp"
#include "bornrad/superadiabatic.hpp"

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

CMat random_projector(int n, int rank, std::uint64_t seed) {
    CounterRng rng(seed, "projector");
    CMat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(rng.normal(), rng.normal());
    Eigen::HouseholderQR<CMat> qr(a);
    const CMat q = qr.householderQ() * CMat::Identity(n, rank);
    return q * q.adjoint();
}

CMat random_hermitian(int n, std::uint64_t seed) {
    CounterRng rng(seed, "hermitian");
    CMat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(rng.normal(), rng.normal());
    return 0.5 * (a + a.adjoint());
}

struct Fixture {
    Grid1D g = make_grid(64, 2 * pi);
    SpectralPtr sp = std::make_shared<Spectral>(g);
    FiberField h = sample_hamiltonian(rotation_model(twisted()), g);
    BandData band = diagonalize_band(h, 1);
};

CMat fiber_matrix(const FiberField& f) {
    const Eigen::Index nd = static_cast<Eigen::Index>(f.n()) * f.dim;
    CMat m(nd, nd);
    for (Eigen::Index c = 0; c < nd; ++c) m.col(c) = f.apply(CVec(CVec::Unit(nd, c)));
    return m;
}

}  // namespace

TEST_CASE("purify leaves an exact projector unchanged") {
    const CMat p = random_projector(24, 9, 1);
    const Projection q = purify(p);
    CHECK(q.rank == 9);
    CHECK((q.q - p).norm() < 1e-12);
}

TEST_CASE("purify bound for off-diagonal perturbations") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const CMat p = random_projector(30, 11, seed);
        const CMat qc = CMat::Identity(30, 30) - p;
        const CMat x = random_hermitian(30, seed + 100);
        CMat off = p * x * qc;
        off = (off + off.adjoint()).eval();
        const double scale = 0.05 + 0.2 * (seed % 5) / 5.0;
        const CMat qt = p + scale * off / operator_norm(off);
        const Projection q = purify(qt);
        CHECK(idempotency_defect(q.q) <= 1e-10);
        CHECK(hermiticity_defect(q.q) <= 1e-10);
        CHECK(operator_norm(q.q - qt) <= idempotency_defect(qt) * (1 + 1e-12));
        CHECK(q.distance == doctest::Approx(operator_norm(q.q - qt)).epsilon(1e-8));
    }
}

TEST_CASE("purify: generic perturbations stay within twice the defect") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const CMat p = random_projector(20, 7, seed);
        const CMat x = random_hermitian(20, seed + 7);
        const CMat qt = p + 0.1 * x / operator_norm(x);
        const Projection q = purify(qt);
        const double delta = q.defect;
        CHECK(delta < 0.25);
        CHECK(operator_norm(q.q - qt) <= 2 * delta + 1e-12);
    }
}

TEST_CASE("purify: routes agree and a large defect is rejected") {
    const CMat p = random_projector(40, 13, 3);
    const CMat x = random_hermitian(40, 4);
    const CMat qt = p + 0.05 * x / operator_norm(x);
    const Projection a = purify(qt);
    PurifyOptions ns;
    ns.eig_limit = 8;
    const Projection b = purify(qt, ns);
    CHECK(b.method != a.method);
    CHECK(b.iterations > 0);
    CHECK((a.q - b.q).norm() < 1e-10);
    CHECK_THROWS_AS(purify(CMat(0.5 * CMat::Identity(10, 10))), DefectTooLarge);
}

TEST_CASE("reduced resolvent inverts H_el - E_j off the band") {
    Fixture f;
    const ReducedResolvent r = reduced_resolvent(f.h, f.band);
    for (int k = 0; k < f.g.n_points; k += 7) {
        const CMat pc = CMat::Identity(2, 2) - f.band.projector[k];
        const CMat hm = f.h[k] - f.band.energies[k] * CMat::Identity(2, 2);
        CHECK((r.r[k] * hm - pc).norm() < 1e-12);
        CHECK((r.r[k] * f.band.projector[k]).norm() < 1e-12);
    }
}

TEST_CASE("differential fiber operator adjoint") {
    Fixture f;
    const FiberField a1 = f.band.projector.derivative(*f.sp, 1);
    CMat c(2, 2);
    c << 0.3, cplx(0.1, 0.2), cplx(-0.4, 0.05), 0.7;
    const FiberField a0 = sample_field(f.g, 2, [&](double x) { return CMat(std::cos(x) * c); });
    const DifferentialFiberOperator op({a0, a1, a0}, 0.1, f.sp);
    CounterRng rng(5, "adjoint");
    CVec u(128), v(128);
    for (int k = 0; k < 128; ++k) {
        u[k] = cplx(rng.normal(), rng.normal());
        v[k] = cplx(rng.normal(), rng.normal());
    }
    // Band-limit so the Nyquist mode does not break the identity.
    for (CVec* w : {&u, &v})
        for (int blk = 0; blk < 2; ++blk) {
            f.sp->forward(w->data() + blk * 64);
            for (int k = 20; k < 45; ++k) (*w)[blk * 64 + k] = 0.0;
            f.sp->backward(w->data() + blk * 64);
        }
    CHECK(std::abs(u.dot(op.apply(v)) - op.apply_adjoint(u).dot(v)) < 1e-10 * u.norm() * v.norm());
}

TEST_CASE("[P0] is the scaled commutator with H_mol") {
    Fixture f;
    const double eps = 1.0 / 16;
    const auto b = bracket_P0(f.band, eps, f.sp);
    const MolecularOperator h = build_molecular_hamiltonian(f.h, eps, f.sp);
    const CVec v = product_state(gaussian_packet(f.g, {2.0, 0.5, 0.5}, eps), CVec(CVec::Ones(2))).normalized();
    const CVec lhs = (h.apply(f.band.projector.apply(v)) - f.band.projector.apply(h.apply(v))) / eps;
    CHECK((lhs - b.apply(v)).norm() < 1e-10);
}

TEST_CASE("rough fibers are rejected") {
    const Grid1D g = make_grid(64, 2 * pi);
    auto sp = std::make_shared<Spectral>(g);
    ModelSpec s = rotation_model(twisted());
    s.fiber_hamiltonian = [](double x) {
        const double th = x < pi ? 0.2 : 1.2;
        CMat h(2, 2);
        h << -std::cos(th), std::sin(th), std::sin(th), std::cos(th);
        return h;
    };
    const BandData b = diagonalize_band(sample_hamiltonian(s, g), 1);
    CHECK_THROWS_AS(bracket_P0(b, 0.1, sp), RoughFiber);
}

TEST_CASE("superadiabatic construction validates order and eps") {
    Fixture f;
    CHECK_THROWS_AS(build_superadiabatic(f.h, f.band, 0.1, 3, f.sp), ValidationError);
    CHECK_THROWS_AS(build_superadiabatic(f.h, f.band, 0.3, 1, f.sp), ValidationError);
}

TEST_CASE("constant fiber: all corrections vanish") {
    const Grid1D g = make_grid(32, 2 * pi);
    auto sp = std::make_shared<Spectral>(g);
    const FiberField h = sample_hamiltonian(constant_model({0.0, 1.0}, pauli_x(), 2.0), g);
    const BandData b = diagonalize_band(h, 1);
    const CMat q = build_superadiabatic(h, b, 1.0 / 16, 2, sp).dense();
    CHECK((q - fiber_matrix(b.projector)).norm() < 1e-12);
}

TEST_CASE("first-order correction is block off-diagonal and satisfies the purify bound") {
    Fixture f;
    const double eps = 1.0 / 16;
    auto builder = std::make_shared<SuperadiabaticBuilder>(f.h, f.band, eps, f.sp);
    const Eigen::Index nd = 128;
    CMat p1(nd, nd);
    for (Eigen::Index c = 0; c < nd; ++c) p1.col(c) = builder->p1(CVec(CVec::Unit(nd, c)));
    const CMat p0 = fiber_matrix(f.band.projector);
    const CMat q0 = CMat::Identity(nd, nd) - p0;
    CHECK((p0 * p1 * p0).norm() < 1e-10 * p1.norm());
    CHECK((q0 * p1 * q0).norm() < 1e-10 * p1.norm());
    const AlmostProjection a(builder, 1, 4.0);
    const CMat qt = a.dense();
    CHECK((qt - qt.adjoint()).norm() < 1e-12);
    const Projection q = purify(a);
    CHECK(idempotency_defect(q.q) <= 1e-10);
    CHECK(hermiticity_defect(q.q) <= 1e-10);
    CHECK(operator_norm(q.q - qt) <= idempotency_defect(qt) * (1 + 1e-9));
}

TEST_CASE("order-1 defect is second order in eps") {
    Fixture f;
    BatchSpec spec{4, 1.0, 0.5, 2, "unit"};
    std::vector<double> d;
    for (double eps : {1.0 / 16, 1.0 / 32}) {
        const auto batch = low_energy_batch(f.g, 2, eps, spec);
        d.push_back(build_superadiabatic(f.h, f.band, eps, 1, f.sp).batch_defect(batch));
    }
    CHECK(std::log2(d[0] / d[1]) == doctest::Approx(2.0).epsilon(0.2));
}
