#pragma once

#include <memory>
#include <vector>

#include "bornrad/propagators.hpp"
#include "bornrad/purify.hpp"

namespace bornrad {

// R_j(x) = P_j^perp (H_el(x) - E_j(x))^{-1} P_j^perp.
struct ReducedResolvent {
    FiberField r;
    int band = 0;
    void apply(const CVec& in, CVec& out) const;
};

// Throws GapViolation if the band is not isolated.
ReducedResolvent reduced_resolvent(const FiberField& h_el, const BandData& band);

// sum_a A_a(x) (eps d/dx)^a, a = 0..order.
class DifferentialFiberOperator {
public:
    DifferentialFiberOperator(std::vector<FiberField> coeff, double eps, SpectralPtr sp);

    int order() const { return static_cast<int>(coeff_.size()) - 1; }
    double eps() const { return eps_; }
    const std::vector<FiberField>& coefficients() const { return coeff_; }

    void apply(const CVec& in, CVec& out) const;
    CVec apply(const CVec& in) const;
    // sum_a (-eps d/dx)^a A_a(x)^*, by summation by parts on the periodic grid.
    void apply_adjoint(const CVec& in, CVec& out) const;
    CVec apply_adjoint(const CVec& in) const;

private:
    std::vector<FiberField> coeff_;
    std::vector<FiberField> coeff_adj_;
    double eps_;
    SpectralPtr sp_;
};

// [P_0] = -eps P_0'' - 2 P_0' (eps d/dx). Throws RoughFiber if the Fourier
// tail of P_0 exceeds tail_tol.
DifferentialFiberOperator bracket_P0(const BandData& band, double eps, SpectralPtr sp,
                                     double tail_tol = 1e-10);

// Pieces of the first- and second-order superadiabatic projections of one band.
class SuperadiabaticBuilder {
public:
    SuperadiabaticBuilder(const FiberField& h_el, const BandData& band, double eps, SpectralPtr sp);

    const MolecularOperator& hamiltonian() const { return h_; }
    const FiberField& p0() const { return band_.projector; }
    const ReducedResolvent& resolvent() const { return r_; }
    const DifferentialFiberOperator& bracket() const { return b_; }
    double eps() const { return h_.eps(); }

    CVec apply_p0(const CVec& v) const;
    CVec s1(const CVec& v) const;
    CVec s1_adjoint(const CVec& v) const;
    CVec p1(const CVec& v) const;
    // P0 + eps P1 + eps^2 (S1* S1 - S1 S1*)
    CVec p_tilde1(const CVec& v) const;
    // eps^-2 [H, P~1]
    CVec bracket_p_tilde1(const CVec& v) const;
    CVec s2(const CVec& v) const;
    CVec s2_adjoint(const CVec& v) const;
    CVec p2(const CVec& v) const;
    // P0 + eps P1 (order 1) or P0 + eps P1 + eps^2 P2 (order 2); order 0 gives P0.
    CVec projection(const CVec& v, int order) const;

private:
    BandData band_;
    MolecularOperator h_;
    ReducedResolvent r_;
    DifferentialFiberOperator b_;
};

// Smooth kinetic-energy window chi(eps^2 k^2): 1 below e_cut, 0 above 2 e_cut.
RVec kinetic_window(const Spectral& sp, double eps, double e_cut);

class AlmostProjection {
public:
    AlmostProjection(std::shared_ptr<const SuperadiabaticBuilder> b, int order, double e_cut = 0.0);

    int order() const { return order_; }
    double eps() const { return b_->eps(); }
    double cutoff() const { return e_cut_; }
    const SuperadiabaticBuilder& builder() const { return *b_; }

    // With a cutoff: P0 + Pt - P0 - (1 - chi)(Pt - P0)(1 - chi).
    CVec apply(const CVec& v) const;
    MatVec matvec() const;
    CMat dense() const;
    AlmostProjection with_cutoff(double e_cut) const;
    // sup over the batch of ||(Q^2 - Q) psi||.
    double batch_defect(const std::vector<CVec>& batch) const;

private:
    std::shared_ptr<const SuperadiabaticBuilder> b_;
    int order_;
    double e_cut_;
    RVec window_;
};

// Throws ValidationError for order outside {1, 2} or eps >= eps0.
AlmostProjection build_superadiabatic(const FiberField& h_el, const BandData& band, double eps, int order,
                                      SpectralPtr sp = nullptr, double eps0 = 0.25);

Projection purify(const AlmostProjection& qt, const PurifyOptions& opt = {});

struct SuperadiabaticScanOptions {
    std::vector<double> ladder{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    BatchSpec batch{8, 1.0, 0.5, 1, "superadiabatic"};
    double cutoff_energy = 4.0;
};

struct SuperadiabaticScan {
    ScalingReport distance;    // ||(P^(k) - P0) psi||
    ScalingReport defect;      // ||((P^(k))^2 - P^(k)) psi||
    ScalingReport commutator;  // ||[H, Q] psi||, Q purified
    std::vector<double> purify_defect;  // operator-norm defect before purification
};

SuperadiabaticScan commutator_scaling_scan(const ModelSpec& spec, const Grid1D& grid, int band_j, int order,
                                           const SuperadiabaticScanOptions& opt = {});

// sup over the batch of ||Q_i Q_j psi|| with purified projections of the given order.
ScalingReport band_orthogonality_check(const ModelSpec& spec, const Grid1D& grid, int band_i, int band_j,
                                       int order, const SuperadiabaticScanOptions& opt = {});

}  // namespace bornrad
