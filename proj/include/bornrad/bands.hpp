#pragma once

#include "bornrad/model.hpp"

namespace bornrad {

struct BandData {
    Grid1D grid;
    int index = 0;
    int dim = 0;
    RVec energies;         // E_j(x_k)
    CMat vectors;          // row k holds phi_j(x_k)^T, parallel-transport gauge
    FiberField projector;  // P_j(x_k)
    double gap = 0.0;
    int gap_point = 0;
    RVec gap_profile;      // distance of E_j(x) to the rest of the spectrum
    // <phi(x_{n-1}), phi(x_0)> normalized: the parallel-transport mismatch at
    // the periodic seam.
    cplx holonomy{1.0, 0.0};

    CVec vector(int k) const { return vectors.row(k).transpose(); }
    double holonomy_phase() const { return std::arg(holonomy); }
    // Eigenvectors in the smooth periodic gauge phi(x_k) exp(i k h / n), with
    // h the seam phase; equal to `vectors` when the holonomy is trivial.
    CMat periodic_vectors() const;
};

// Band j (ascending order) of a Hermitian fiber. threshold < 0 selects the
// default 1e-6 times the spectral range of the field.
BandData diagonalize_band(const FiberField& h_el, int j, double threshold = -1.0);

// Returns band.gap; throws GapViolation (carrying the grid point) if below.
double verify_gap(const BandData& band, double threshold);

// phi -> exp(i gamma(x)) phi. The recorded holonomy is kept.
BandData rephase(const BandData& band, const RVec& gamma);

// A_j(x) = i <phi, d phi/dx>, using spectral derivatives of the periodic gauge.
CVec berry_connection_raw(const BandData& band, const Spectral& sp);
RVec berry_connection(const BandData& band, const Spectral& sp);

// D_ij(x) = <phi_i(x), mu(x) phi_j(x)>.
CVec dipole_elements(const BandData& band_i, const BandData& band_j, const FiberField& mu);

// max_x |<phi_i, [H_el, mu] phi_j> - (E_i - E_j) D_ij|.
double commutator_dipole_identity(const BandData& band_i, const BandData& band_j,
                                  const FiberField& h_el, const FiberField& mu);

// max_x ||H phi - E phi|| / ||H(x)||.
double eigen_residual(const BandData& band, const FiberField& h_el);

}  // namespace bornrad
