#pragma once

#include "bornrad/dressed.hpp"

namespace bornrad {

// P_l H_mol P_l in band coefficients c(x) (psi = c phi_l), as a dense n x n
// matrix, with its eigendecomposition. Uses the periodic gauge.
class BandPropagator {
public:
    BandPropagator(const BandData& band, double eps, const Spectral& sp);

    const BandData& band() const { return band_; }
    double eps() const { return eps_; }
    const CMat& matrix() const { return b_; }
    const RVec& eigenvalues() const { return lam_; }
    const CMat& eigenvectors() const { return v_; }
    const CMat& vectors() const { return phi_; }

    CVec coefficients(const CVec& psi) const;  // <phi(x), psi(x)>
    CVec embed(const CVec& c) const;           // c(x) phi(x)
    // exp(-i (t/eps) B) c
    CVec evolve(const CVec& c, double t) const;

private:
    BandData band_;
    double eps_;
    CMat phi_;
    CMat b_;
    RVec lam_;
    CMat v_;
};

// Leading transition operator from band j to band i, one photon emitted:
// per mode m a multiplication kernel a_m(x) in band coefficients, optionally
// with the gradient correction applied to <phi_j, -i eps d/dx psi>.
struct TransitionOperator {
    CMat amp;     // n x M
    CMat amp_t2;  // n x M, zero unless with_t2
    bool with_t2 = false;
    double eps = 0.0;
    double delta = 0.0;
    RVec gap;     // E_j - E_i
    CVec dipole;  // D_ij in the periodic gauge

    // Band-j molecular state -> dressed state in the band-i one-photon sectors.
    DressedState apply(const CVec& psi, const BandPropagator& bi, const BandPropagator& bj,
                       const Spectral& sp) const;
};

// Throws WrongSign unless E_j > E_i on the whole grid.
TransitionOperator build_transition_operator(const BandData& band_i, const BandData& band_j, const FiberField& mu,
                                             const PhotonModes& modes, double eps, double delta, bool with_t2,
                                             const Spectral& sp);

struct DysonOptions {
    double steps_per_unit = 64.0;  // N_s = steps_per_unit * t / eps
    bool check_doubling = true;
    double tol = 0.01;
};

struct DysonResult {
    DressedState state;    // band-i one-photon amplitude, without the coupling prefactor
    double norm2 = 0.0;
    double probability = 0.0;  // norm2 * coupling^2 / eps
    long steps = 0;
    double doubling_change = 0.0;
};

// i int_0^t exp(-i (t-s)/eps (H_i + H_f)) T_{j->i} exp(-i s/eps H_j) ds psi by
// composite midpoint quadrature. Throws QuadratureNotConverged if doubling the
// step count changes the norm by more than opt.tol.
DysonResult dyson_transition(const TransitionOperator& op, const BandPropagator& bi, const BandPropagator& bj,
                             const PhotonModes& modes, const CVec& psi0, double t, double coupling,
                             const Spectral& sp, const DysonOptions& opt = {});

}  // namespace bornrad
