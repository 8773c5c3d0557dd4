#include "bornrad/grid.hpp"

#include <fftw3.h>

#include "bornrad/errors.hpp"

namespace bornrad {

RVec Grid1D::points() const {
    RVec x(n_points);
    for (int k = 0; k < n_points; ++k) x[k] = point(k);
    return x;
}

RVec Grid1D::wavenumbers() const {
    RVec k(n_points);
    const double base = 2.0 * pi / length;
    for (int m = 0; m < n_points; ++m) {
        const int f = (m <= n_points / 2 - 1) ? m : m - n_points;
        k[m] = base * f;
    }
    // Nyquist entry carries -n/2; only its square matters for even symbols.
    return k;
}

Grid1D make_grid(int n_points, double length) {
    if (n_points < 4 || (n_points & (n_points - 1)) != 0)
        throw ValidationError("n_points must be a power of two >= 4, got " +
                              std::to_string(n_points));
    if (!(length > 0.0)) throw ValidationError("grid length must be positive");
    return Grid1D{n_points, length};
}

Spectral::Spectral(const Grid1D& grid) : grid_(grid), buf_(grid.n_points) {
    const int n = grid.n_points;
    k_ = grid.wavenumbers();
    k_odd_ = k_;
    k_odd_[n / 2] = 0.0;
    k2_ = k_.array().square();
    auto* b = reinterpret_cast<fftw_complex*>(buf_.data());
    plan_fwd_ = fftw_plan_dft_1d(n, b, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_bwd_ = fftw_plan_dft_1d(n, b, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Spectral::~Spectral() {
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void Spectral::forward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), p, p);
}

void Spectral::backward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), p, p);
    const double s = 1.0 / grid_.n_points;
    for (int i = 0; i < grid_.n_points; ++i) data[i] *= s;
}

void Spectral::apply_symbol(cplx* data, const CVec& symbol) const {
    forward(data);
    for (int i = 0; i < grid_.n_points; ++i) data[i] *= symbol[i];
    backward(data);
}

void Spectral::apply_symbol(cplx* data, const RVec& symbol) const {
    forward(data);
    for (int i = 0; i < grid_.n_points; ++i) data[i] *= symbol[i];
    backward(data);
}

void Spectral::derivative(cplx* data, int order) const {
    const int n = grid_.n_points;
    forward(data);
    if (order == 1) {
        for (int i = 0; i < n; ++i) data[i] *= cplx(0.0, k_odd_[i]);
    } else if (order == 2) {
        for (int i = 0; i < n; ++i) data[i] *= -k2_[i];
    } else {
        throw ValidationError("derivative order must be 1 or 2");
    }
    backward(data);
}

CVec Spectral::derivative(const CVec& col, int order) const {
    CVec out = col;
    derivative(out.data(), order);
    return out;
}

void Spectral::apply_symbol_blocks(CVec& v, const RVec& symbol) const {
    const int n = grid_.n_points;
    for (Eigen::Index off = 0; off < v.size(); off += n) apply_symbol(v.data() + off, symbol);
}

void Spectral::apply_symbol_blocks(CVec& v, const CVec& symbol) const {
    const int n = grid_.n_points;
    for (Eigen::Index off = 0; off < v.size(); off += n) apply_symbol(v.data() + off, symbol);
}

void Spectral::derivative_blocks(CVec& v, int order) const {
    const int n = grid_.n_points;
    for (Eigen::Index off = 0; off < v.size(); off += n) derivative(v.data() + off, order);
}

}  // namespace bornrad
