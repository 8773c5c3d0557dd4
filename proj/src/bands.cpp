#include "bornrad/bands.hpp"

#include <cmath>
#include <limits>

#include "bornrad/errors.hpp"

namespace bornrad {

CMat BandData::periodic_vectors() const {
    const int n = grid.n_points;
    const double twist = holonomy_phase() / n;
    CMat out = vectors;
    for (int k = 0; k < n; ++k) out.row(k) *= std::exp(cplx(0.0, twist * k));
    return out;
}

BandData diagonalize_band(const FiberField& h_el, int j, double threshold) {
    const int n = h_el.n();
    const int d = h_el.dim;
    if (j < 0 || j >= d) throw DimensionMismatch("band index out of range");
    const double herm = h_el.hermiticity_residual();
    double scale = 0.0;
    for (const auto& a : h_el.m) scale = std::max(scale, a.cwiseAbs().maxCoeff());
    if (herm > 1e-13 * std::max(1.0, scale))
        throw NonHermitianFiber("fiber Hermiticity residual " + std::to_string(herm));

    BandData b;
    b.grid = h_el.grid;
    b.index = j;
    b.dim = d;
    b.energies.resize(n);
    b.vectors.resize(n, d);
    b.gap_profile.resize(n);
    b.projector = zero_field(h_el.grid, d);

    double emin = std::numeric_limits<double>::infinity();
    double emax = -emin;
    Eigen::SelfAdjointEigenSolver<CMat> es;
    CVec prev;
    for (int k = 0; k < n; ++k) {
        es.compute(h_el[k]);
        const RVec& ev = es.eigenvalues();
        emin = std::min(emin, ev[0]);
        emax = std::max(emax, ev[d - 1]);
        CVec v = es.eigenvectors().col(j);
        if (k == 0) {
            // Fix the initial phase: largest component real positive.
            Eigen::Index imax = 0;
            v.cwiseAbs().maxCoeff(&imax);
            v *= std::conj(v[imax]) / std::abs(v[imax]);
        } else {
            const cplx ov = prev.dot(v);
            v *= std::conj(ov) / std::abs(ov);
        }
        double g = std::numeric_limits<double>::infinity();
        for (int l = 0; l < d; ++l)
            if (l != j) g = std::min(g, std::abs(ev[l] - ev[j]));
        b.energies[k] = ev[j];
        b.vectors.row(k) = v.transpose();
        b.projector[k] = v * v.adjoint();
        b.gap_profile[k] = g;
        prev = v;
    }
    Eigen::Index gp = 0;
    b.gap = b.gap_profile.minCoeff(&gp);
    b.gap_point = static_cast<int>(gp);
    const cplx seam = b.vector(n - 1).dot(b.vector(0));
    b.holonomy = seam / std::abs(seam);

    if (threshold < 0.0) threshold = 1e-6 * std::max(emax - emin, 1.0);
    if (b.gap < threshold)
        throw DegenerateBand("band " + std::to_string(j) + " gap " + std::to_string(b.gap) +
                             " below threshold " + std::to_string(threshold) + " at x = " +
                             std::to_string(h_el.grid.point(b.gap_point)));
    return b;
}

double verify_gap(const BandData& band, double threshold) {
    if (band.gap < threshold)
        throw GapViolation("gap " + std::to_string(band.gap) + " below " +
                               std::to_string(threshold) + " at grid point " +
                               std::to_string(band.gap_point),
                           band.gap_point);
    return band.gap;
}

BandData rephase(const BandData& band, const RVec& gamma) {
    if (gamma.size() != band.grid.n_points) throw DimensionMismatch("phase array length");
    BandData out = band;
    for (int k = 0; k < band.grid.n_points; ++k) out.vectors.row(k) *= std::exp(cplx(0.0, gamma[k]));
    return out;
}

CVec berry_connection_raw(const BandData& band, const Spectral& sp) {
    const int n = band.grid.n_points;
    const CMat v = band.periodic_vectors();
    CMat dv(n, band.dim);
    for (int c = 0; c < band.dim; ++c) {
        CVec col = v.col(c);
        sp.derivative(col.data(), 1);
        dv.col(c) = col;
    }
    CVec a(n);
    for (int k = 0; k < n; ++k) {
        cplx s = 0.0;
        for (int c = 0; c < band.dim; ++c) s += std::conj(v(k, c)) * dv(k, c);
        a[k] = I * s;
    }
    return a;
}

RVec berry_connection(const BandData& band, const Spectral& sp) {
    return berry_connection_raw(band, sp).real();
}

CVec dipole_elements(const BandData& band_i, const BandData& band_j, const FiberField& mu) {
    const int n = band_i.grid.n_points;
    if (band_j.grid.n_points != n || mu.n() != n || mu.dim != band_i.dim || band_j.dim != band_i.dim)
        throw DimensionMismatch("bands and dipole field disagree in shape");
    CVec d(n);
    for (int k = 0; k < n; ++k) d[k] = band_i.vector(k).dot(mu[k] * band_j.vector(k));
    return d;
}

double commutator_dipole_identity(const BandData& band_i, const BandData& band_j,
                                  const FiberField& h_el, const FiberField& mu) {
    const CVec d = dipole_elements(band_i, band_j, mu);
    double r = 0.0;
    for (int k = 0; k < h_el.n(); ++k) {
        const CMat c = h_el[k] * mu[k] - mu[k] * h_el[k];
        const cplx lhs = band_i.vector(k).dot(c * band_j.vector(k));
        const cplx rhs = (band_i.energies[k] - band_j.energies[k]) * d[k];
        r = std::max(r, std::abs(lhs - rhs));
    }
    return r;
}

double eigen_residual(const BandData& band, const FiberField& h_el) {
    double r = 0.0;
    for (int k = 0; k < h_el.n(); ++k) {
        const CVec v = band.vector(k);
        const double hn = std::max(h_el[k].norm(), 1e-300);
        r = std::max(r, (h_el[k] * v - band.energies[k] * v).norm() / hn);
    }
    return r;
}

}  // namespace bornrad
