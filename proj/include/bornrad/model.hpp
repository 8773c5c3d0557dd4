#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bornrad/grid.hpp"
#include "bornrad/types.hpp"

namespace bornrad {

// Grid-indexed family of d x d matrices. Molecular vectors use the stacked
// layout v[c * n + k] (electronic component c, grid point k).
struct FiberField {
    Grid1D grid;
    int dim = 0;
    std::vector<CMat> m;

    int n() const { return grid.n_points; }
    const CMat& operator[](int k) const { return m[k]; }
    CMat& operator[](int k) { return m[k]; }

    // out = F(x) in, pointwise; in/out hold one molecular block (n * dim).
    void apply(const cplx* in, cplx* out) const;
    CVec apply(const CVec& v) const;
    // Applies F(x)^dagger pointwise.
    void apply_adjoint(const cplx* in, cplx* out) const;
    CVec apply_adjoint(const CVec& v) const;

    double hermiticity_residual() const;
    FiberField adjoint() const;
    // Entrywise spectral derivative (order 1 or 2).
    FiberField derivative(const Spectral& sp, int order) const;
    // Largest relative Fourier-tail magnitude over all entries (upper half of
    // the spectrum relative to the largest coefficient); a smoothness proxy.
    double fourier_tail(const Spectral& sp) const;
};

FiberField sample_field(const Grid1D& grid, int dim, const std::function<CMat(double)>& f);
FiberField zero_field(const Grid1D& grid, int dim);
FiberField identity_field(const Grid1D& grid, int dim);
FiberField operator*(const FiberField& a, const FiberField& b);
FiberField operator+(const FiberField& a, const FiberField& b);
FiberField operator-(const FiberField& a, const FiberField& b);
FiberField operator*(double s, const FiberField& a);
FiberField operator*(cplx s, const FiberField& a);

struct ModelSpec {
    std::string name;
    int dim = 2;
    std::function<CMat(double)> fiber_hamiltonian;
    std::function<CMat(double)> dipole;
    double lambda0 = 2.0;
    int band_i = 0;
    int band_j = 1;
};

// H_el(x) = diag(levels), constant dipole.
ModelSpec constant_model(const std::vector<double>& levels, const CMat& dipole, double lambda0);

// Two-level model
//   H_el(x) = v(x) + e(x) [[-cos th, sin th e^{-i ph}], [sin th e^{i ph}, cos th]]
// with th = theta0 + theta_amp sin(q x), e = half_gap + gap_mod cos(q x),
// ph = phase_amp cos(q x) + phase_amp2 sin(2 q x), v = shift_amp sin(q x),
// q = 2 pi / length. Bands are v -+ e.
struct RotationParams {
    double length = 2.0 * pi;
    double theta0 = 0.3;
    double theta_amp = 0.6;
    double half_gap = 1.0;
    double gap_mod = 0.0;
    double phase_amp = 0.0;
    double phase_amp2 = 0.0;
    double shift_amp = 0.0;
    CMat dipole;  // defaults to Pauli x when empty
    double lambda0 = 4.0;
};
ModelSpec rotation_model(const RotationParams& p);

FiberField sample_hamiltonian(const ModelSpec& spec, const Grid1D& grid);
FiberField sample_dipole(const ModelSpec& spec, const Grid1D& grid);

// Pauli matrices.
CMat pauli_x();
CMat pauli_y();
CMat pauli_z();

}  // namespace bornrad
