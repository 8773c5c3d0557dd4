#pragma once

#include <memory>
#include <vector>

#include "bornrad/types.hpp"

namespace bornrad {

// Periodic 1D nuclear grid on [0, length).
struct Grid1D {
    int n_points = 0;
    double length = 0.0;

    double spacing() const { return length / n_points; }
    double point(int k) const { return k * spacing(); }
    RVec points() const;
    // Angular wavenumbers in FFT order.
    RVec wavenumbers() const;
};

// Throws ValidationError unless n is a power of two >= 4 and L > 0.
Grid1D make_grid(int n_points, double length);

// FFT-based spectral calculus on columns of length n_points.
// Holds FFTW plans; not safe to share between threads.
class Spectral {
public:
    explicit Spectral(const Grid1D& grid);
    ~Spectral();
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    const Grid1D& grid() const { return grid_; }
    const RVec& k() const { return k_; }
    // Wavenumbers with the Nyquist entry zeroed; used for odd derivatives so
    // that D is exactly anti-Hermitian.
    const RVec& k_odd() const { return k_odd_; }

    void forward(cplx* data) const;
    void backward(cplx* data) const;  // normalized inverse

    // data <- F^{-1} diag(symbol) F data
    void apply_symbol(cplx* data, const CVec& symbol) const;
    void apply_symbol(cplx* data, const RVec& symbol) const;

    // In-place derivative of a length-n column, order 1 or 2.
    void derivative(cplx* data, int order) const;
    CVec derivative(const CVec& col, int order) const;

    // Apply a symbol to each length-n block of a stacked vector.
    void apply_symbol_blocks(CVec& v, const RVec& symbol) const;
    void apply_symbol_blocks(CVec& v, const CVec& symbol) const;
    void derivative_blocks(CVec& v, int order) const;

private:
    Grid1D grid_;
    RVec k_, k_odd_, k2_;
    void* plan_fwd_ = nullptr;
    void* plan_bwd_ = nullptr;
    mutable std::vector<cplx> buf_;
};

using SpectralPtr = std::shared_ptr<const Spectral>;

}  // namespace bornrad
