#pragma once

#include <optional>
#include <vector>

#include "bornrad/propagators.hpp"
#include "bornrad/purify.hpp"

namespace bornrad {

enum class QuadratureScheme { midpoint, gauss_legendre };

QuadratureScheme parse_scheme(const std::string& name);

// Radial photon modes on (0, lambda0]. w are plain dk weights; the angular
// factor is carried by the coupling constants.
struct PhotonModes {
    RVec k;
    RVec w;
    RVec rho;  // sharp form factor (2 pi)^{-3/2} on [0, lambda0]
    double lambda0 = 0.0;
    QuadratureScheme scheme = QuadratureScheme::midpoint;
    double resonance_offset = 0.0;  // min |k_m - gap(x)| when gaps were supplied

    int count() const { return static_cast<int>(k.size()); }
};

// Throws ValidationError for M < 8 or lambda0 <= 0, ResonantMode if a mode sits
// within 1e-12 of one of `gaps`.
PhotonModes build_modes(double lambda0, int count, QuadratureScheme scheme, const RVec* gaps = nullptr);

// Squared coupling density kappa(k)^2 of a radial mode, chosen so that the
// discrete golden-rule rate of the truncated model tends to (4/3) dE^3 |D|^2.
// See docs/coupling_normalization.md.
double coupling_density(double k);

// Velocity-form electronic coupling C(x) = i [H_el(x), mu(x)] and the mode
// constants g_m = kappa(k_m) sqrt(w_m).
struct CouplingOperator {
    FiberField c;
    FiberField c_adj;
    RVec g;
};

CouplingOperator build_coupling(const FiberField& h_el, const FiberField& mu, const PhotonModes& modes);

// Discrete golden-rule rate sum_m 2 pi g_m^2 |C_ij|^2 L(k_m - dE) with a
// Lorentzian L of half-width `width` (defaults to the mode spacing).
double discrete_golden_rule_rate(const PhotonModes& modes, double gap, double matrix_element,
                                 double width = 0.0);

// delta = eps^{1/2 - (beta - 5/6)/5}
double default_delta(double eps, double beta);

struct DressingParams {
    double eps = 0.0;
    double beta = 1.0;
    double delta = 0.0;
    double coupling = 0.0;  // prefactor of H_1, eps^{3 beta / 2} unless overridden
    bool unsafe_beta = false;
};

// Throws ValidationError for beta outside (5/6, 4/3] without unsafe_beta, or
// for delta < sqrt(eps).
DressingParams make_dressing_params(double eps, double beta, std::optional<double> delta_override = {},
                                    std::optional<double> coupling_override = {}, bool unsafe_beta = false);

// Sector layout as DressedState: [vac | mode 0 | ... | mode M-1].
// vac <- sum_m g_m C^* psi_m, mode m <- g_m C psi_vac. Returns the weight of the
// dropped two-photon component.
double apply_H1(const CouplingOperator& c, int n, int d, const CVec& in, CVec& out);
DressedState apply_H1(const DressedState& s, const CouplingOperator& c, double* dropped = nullptr);

// H = H_mol + H_f + coupling * H_1 on the 0/1-photon sectors.
class DressedHamiltonian {
public:
    DressedHamiltonian(MolecularOperator h, CouplingOperator c, PhotonModes modes, double coupling,
                       double a2_proxy = 0.0);

    const MolecularOperator& molecular() const { return h_; }
    const CouplingOperator& coupling_operator() const { return c_; }
    const PhotonModes& modes() const { return modes_; }
    double coupling() const { return g_; }
    int sectors() const { return modes_.count() + 1; }
    Eigen::Index block() const { return h_.size(); }
    Eigen::Index size() const { return block() * sectors(); }

    void apply(const CVec& in, CVec& out) const;
    CVec apply(const CVec& in) const;
    MatVec matvec() const;
    // Two-photon weight dropped by the last apply (coupling^2 included).
    double last_dropped() const { return dropped_; }

private:
    MolecularOperator h_;
    CouplingOperator c_;
    PhotonModes modes_;
    double g_;
    double a2_;
    mutable double dropped_ = 0.0;
};

// T_delta = -(H_f + H_el - E_j + i delta)^{-1} H_1 (P_j (x) Q_0), without the
// coupling prefactor. Fiberwise T(x) = t(x) phi_j(x)^* with t(x) in C^{M d}.
class TDelta {
public:
    TDelta(const FiberField& h_el, const BandData& band, const CouplingOperator& c, const PhotonModes& modes,
           double delta, const Spectral& sp);

    int n() const { return n_; }
    int dim() const { return d_; }
    int modes() const { return m_; }
    double delta() const { return delta_; }
    // t(x) for grid point x: entry m * d + c.
    const CMat& vectors() const { return t_; }  // n x (M d)
    const CMat& band_vectors() const { return phi_; }
    // Molecular vacuum input -> one-photon sectors (block layout, vacuum sector zero).
    CVec apply(const CVec& vac) const;
    // One-photon sectors of a dressed vector -> molecular vector.
    CVec apply_adjoint(const CVec& dressed) const;
    RVec fiber_norms() const;
    double norm() const;           // sup_x ||T(x)||
    double gradient_norm() const;  // sup_x ||d/dx T(x)||

private:
    int n_, d_, m_;
    double delta_;
    CMat phi_;   // periodic-gauge band vectors, n x d
    CMat t_;
    CMat dt_;    // d t / dx
    CMat dphi_;  // d phi / dx
};

// Dressed vacuum projection purified in the subspace vac (+) span{u(x)}, with
// u(x) = t(x)/||t(x)||, which contains the range of the almost-projection.
class DressedVacuum {
public:
    DressedVacuum(const CMat& p_eps, const TDelta& t, double coupling);

    const Projection& projection() const { return q_; }
    const CMat& reduced_almost() const { return pt_; }
    double coupling() const { return g_; }
    // Reduced coordinates of a vacuum-sector molecular vector.
    CVec embed_vacuum(const CVec& vac) const;
    // Full dressed vector from reduced coordinates.
    CVec expand(const CVec& reduced) const;
    // ||(P_vac - P (x) Q_0) psi|| and ||(Pt^2 - Pt) psi|| for a vacuum-sector psi.
    double distance(const CVec& vac) const;
    double almost_defect(const CVec& vac) const;
    double operator_distance() const;

private:
    const TDelta* t_;
    CMat pt_;
    Projection q_;
    double g_;
    Eigen::Index nd_;
};

struct DressedScanOptions {
    std::vector<double> ladder{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    double beta = 1.0;
    int modes = 256;
    QuadratureScheme scheme = QuadratureScheme::midpoint;
    BatchSpec batch{8, 1.0, 0.5, 1, "dressed"};
    int band_j = 1;
    double cutoff_energy = 4.0;
    std::optional<double> delta_override;
    bool unsafe_beta = false;
};

struct DressedScan {
    ScalingReport distance;       // ||(P_vac - P^eps (x) Q_0) psi||
    ScalingReport defect;         // ||(Pt_vac^2 - Pt_vac) psi||
    ScalingReport commutator;     // ||[H, Pt_vac] psi||
    ScalingReport residual;       // after removing the -i delta g T psi term
    std::vector<double> delta;
    double expected_distance = 0.0;
    double expected_defect = 0.0;
    double expected_commutator = 0.0;
};

// All quantities on the batch projected into Ran(P^eps (x) Q_0), with P^eps the
// purified second-order projection of band j.
DressedScan commutator_dressed_scan(const ModelSpec& spec, const Grid1D& grid, const DressedScanOptions& opt = {});

// [H, Pt_vac] on a dressed vector, Pt_vac = P (x) Q_0 + g (T + T^*).
CVec dressed_commutator(const DressedHamiltonian& h, const CMat& p_eps, const TDelta& t, const CVec& psi);

}  // namespace bornrad
