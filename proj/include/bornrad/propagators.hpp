#pragma once

#include <vector>

#include "bornrad/bands.hpp"
#include "bornrad/krylov.hpp"
#include "bornrad/scaling.hpp"
#include "bornrad/states.hpp"

namespace bornrad {

// H_mol = -eps^2 d^2/dx^2 + H_el(x) on the stacked layout.
class MolecularOperator {
public:
    MolecularOperator(FiberField h_el, double eps, SpectralPtr sp);

    double eps() const { return eps_; }
    int n() const { return fiber_.n(); }
    int dim() const { return fiber_.dim; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(n()) * dim(); }
    const FiberField& fiber() const { return fiber_; }
    const Spectral& spectral() const { return *sp_; }
    SpectralPtr spectral_ptr() const { return sp_; }
    const RVec& kinetic_symbol() const { return kin_; }  // eps^2 k^2

    void apply(const CVec& in, CVec& out) const;
    CVec apply(const CVec& in) const;
    void apply_kinetic(const CVec& in, CVec& out) const;
    MatVec matvec() const;

private:
    FiberField fiber_;
    double eps_;
    SpectralPtr sp_;
    RVec kin_;
};

// Throws ValidationError unless 0 < eps < 1.
MolecularOperator build_molecular_hamiltonian(const ModelSpec& spec, const Grid1D& grid, double eps,
                                              SpectralPtr sp = nullptr);
MolecularOperator build_molecular_hamiltonian(const FiberField& h_el, double eps,
                                              SpectralPtr sp = nullptr);

struct StrangOptions {
    double dt = 0.0;          // macroscopic step; 0 selects t * eps / 4096
    bool self_check = false;  // halve dt until the state changes by < tol
    double tol = 1e-8;
    int max_halvings = 4;
};

struct PropagationInfo {
    double dt_used = 0.0;
    long steps = 0;
    double self_check_change = 0.0;
};

// exp(-i (t/eps) H_mol) psi0 by Strang splitting: half potential (exact
// pointwise matrix exponential), full kinetic in Fourier space, half
// potential. Throws StepSizeTooLarge if the self-check does not settle.
CVec propagate_full(const MolecularOperator& h, const CVec& psi0, double t,
                    const StrangOptions& opt = {}, PropagationInfo* info = nullptr);

// H_j = P H P + (1 - P) H (1 - P).
class DiagonalHamiltonian {
public:
    DiagonalHamiltonian(const MolecularOperator& h, FiberField projector);
    const MolecularOperator& molecular() const { return h_; }
    const FiberField& projector() const { return p_; }
    void apply(const CVec& in, CVec& out) const;
    CVec apply(const CVec& in) const;
    MatVec matvec() const;

private:
    MolecularOperator h_;
    FiberField p_;
};

// Checks P(x) is a projector commuting with H_el(x); throws ProjectorMismatch.
DiagonalHamiltonian build_diagonal_hamiltonian(const MolecularOperator& h, const FiberField& projector);

CVec propagate_diagonal(const DiagonalHamiltonian& hj, const CVec& psi0, double t,
                        const KrylovOptions& opt = {}, KrylovStats* stats = nullptr);

// Scalar nuclear operator eps^2 (-i d/dx - A)^2 + E_j, optionally with the
// O(eps^2) term eps^2 (|phi'|^2 - A^2) that makes it the exact band block.
class BoEffective {
public:
    BoEffective(RVec connection, RVec energy, RVec extra, double eps, SpectralPtr sp);
    void apply(const CVec& in, CVec& out) const;
    CVec apply(const CVec& in) const;
    MatVec matvec() const;
    CMat dense() const;
    const RVec& connection() const { return a_; }
    double eps() const { return eps_; }

private:
    RVec a_, e_, extra_;
    double eps_;
    SpectralPtr sp_;
};

BoEffective build_bo_effective(const BandData& band, double eps, SpectralPtr sp,
                               bool born_huang = false);

CVec propagate_bo(const BoEffective& h, const CVec& phi0, double t, const KrylovOptions& opt = {});

// Lowest `count` eigenvalues of the effective operator.
RVec bo_spectrum(const BoEffective& h, int count);

// Projects onto eigenvectors of the dense H_mol with eigenvalue <= e_cut.
// Only for n * d <= 512 * d; throws BudgetExceeded otherwise.
CVec spectral_filter(const MolecularOperator& h, const CVec& psi, double e_cut);

struct AdiabaticScanOptions {
    double t = 1.0;
    std::vector<double> ladder{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    BatchSpec batch{16, 1.0, 0.5, 1, "adiabatic"};
    StrangOptions strang;
    KrylovOptions krylov;
};

// For each eps: batch-sup || (exp(-i t/eps H_mol) - exp(-i t/eps H_j)) psi ||
// over band-j wavepackets.
ScalingReport adiabatic_error_scan(const ModelSpec& spec, const Grid1D& grid, int band_j,
                                   const AdiabaticScanOptions& opt);

// || exp(-i t/eps H_j) (phi phi_j) - (exp(-i t/eps h_j) phi) phi_j ||.
double bo_vs_diagonal_check(const BandData& band, const DiagonalHamiltonian& hj,
                            const BoEffective& bo, const CVec& phi, double t,
                            const KrylovOptions& opt = {});

}  // namespace bornrad
