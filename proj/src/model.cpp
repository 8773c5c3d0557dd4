#include "bornrad/model.hpp"

#include <cmath>

#include "bornrad/errors.hpp"

namespace bornrad {

void FiberField::apply(const cplx* in, cplx* out) const {
    const int nn = n();
    for (int k = 0; k < nn; ++k) {
        const CMat& a = m[k];
        for (int r = 0; r < dim; ++r) {
            cplx s = 0.0;
            for (int c = 0; c < dim; ++c) s += a(r, c) * in[c * nn + k];
            out[r * nn + k] = s;
        }
    }
}

CVec FiberField::apply(const CVec& v) const {
    CVec out(v.size());
    apply(v.data(), out.data());
    return out;
}

void FiberField::apply_adjoint(const cplx* in, cplx* out) const {
    const int nn = n();
    for (int k = 0; k < nn; ++k) {
        const CMat& a = m[k];
        for (int r = 0; r < dim; ++r) {
            cplx s = 0.0;
            for (int c = 0; c < dim; ++c) s += std::conj(a(c, r)) * in[c * nn + k];
            out[r * nn + k] = s;
        }
    }
}

CVec FiberField::apply_adjoint(const CVec& v) const {
    CVec out(v.size());
    apply_adjoint(v.data(), out.data());
    return out;
}

double FiberField::hermiticity_residual() const {
    double r = 0.0;
    for (const auto& a : m) r = std::max(r, (a - a.adjoint()).cwiseAbs().maxCoeff());
    return r;
}

FiberField FiberField::adjoint() const {
    FiberField out = *this;
    for (auto& a : out.m) a = a.adjoint().eval();
    return out;
}

FiberField FiberField::derivative(const Spectral& sp, int order) const {
    FiberField out = *this;
    CVec col(n());
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            for (int k = 0; k < n(); ++k) col[k] = m[k](r, c);
            sp.derivative(col.data(), order);
            for (int k = 0; k < n(); ++k) out.m[k](r, c) = col[k];
        }
    return out;
}

double FiberField::fourier_tail(const Spectral& sp) const {
    const int nn = n();
    CVec col(nn);
    double worst = 0.0;
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            for (int k = 0; k < nn; ++k) col[k] = m[k](r, c);
            sp.forward(col.data());
            // Compare against the largest non-constant coefficient so that
            // constant entries do not mask rough ones.
            double peak = 0.0, tail = 0.0;
            for (int k = 0; k < nn; ++k) {
                const double f = std::abs(sp.k()[k]);
                const double a = std::abs(col[k]);
                peak = std::max(peak, a);
                if (f >= 0.25 * nn * (2.0 * pi / grid.length)) tail = std::max(tail, a);
            }
            if (peak > 0.0) worst = std::max(worst, tail / peak);
        }
    return worst;
}

FiberField sample_field(const Grid1D& grid, int dim, const std::function<CMat(double)>& f) {
    FiberField out{grid, dim, {}};
    out.m.reserve(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) {
        CMat a = f(grid.point(k));
        if (a.rows() != dim || a.cols() != dim)
            throw DimensionMismatch("fiber matrix has shape " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ", expected " +
                                    std::to_string(dim));
        out.m.push_back(std::move(a));
    }
    return out;
}

FiberField zero_field(const Grid1D& grid, int dim) {
    return sample_field(grid, dim, [dim](double) { return CMat::Zero(dim, dim); });
}

FiberField identity_field(const Grid1D& grid, int dim) {
    return sample_field(grid, dim, [dim](double) { return CMat::Identity(dim, dim); });
}

namespace {
void check_same(const FiberField& a, const FiberField& b) {
    if (a.dim != b.dim || a.n() != b.n()) throw DimensionMismatch("fiber fields differ in shape");
}
}  // namespace

FiberField operator*(const FiberField& a, const FiberField& b) {
    check_same(a, b);
    FiberField out = a;
    for (int k = 0; k < a.n(); ++k) out.m[k] = a.m[k] * b.m[k];
    return out;
}

FiberField operator+(const FiberField& a, const FiberField& b) {
    check_same(a, b);
    FiberField out = a;
    for (int k = 0; k < a.n(); ++k) out.m[k] += b.m[k];
    return out;
}

FiberField operator-(const FiberField& a, const FiberField& b) {
    check_same(a, b);
    FiberField out = a;
    for (int k = 0; k < a.n(); ++k) out.m[k] -= b.m[k];
    return out;
}

FiberField operator*(double s, const FiberField& a) {
    FiberField out = a;
    for (auto& x : out.m) x *= s;
    return out;
}

FiberField operator*(cplx s, const FiberField& a) {
    FiberField out = a;
    for (auto& x : out.m) x *= s;
    return out;
}

CMat pauli_x() {
    CMat s(2, 2);
    s << 0, 1, 1, 0;
    return s;
}

CMat pauli_y() {
    CMat s(2, 2);
    s << 0, cplx(0, -1), cplx(0, 1), 0;
    return s;
}

CMat pauli_z() {
    CMat s(2, 2);
    s << 1, 0, 0, -1;
    return s;
}

ModelSpec constant_model(const std::vector<double>& levels, const CMat& dipole, double lambda0) {
    const int d = static_cast<int>(levels.size());
    if (d < 2) throw ValidationError("constant model needs at least two levels");
    if (dipole.rows() != d || dipole.cols() != d)
        throw DimensionMismatch("dipole shape does not match level count");
    CMat h = CMat::Zero(d, d);
    for (int i = 0; i < d; ++i) h(i, i) = levels[i];
    ModelSpec s;
    s.name = "constant";
    s.dim = d;
    s.fiber_hamiltonian = [h](double) { return h; };
    s.dipole = [dipole](double) { return dipole; };
    s.lambda0 = lambda0;
    s.band_i = 0;
    s.band_j = 1;
    return s;
}

ModelSpec rotation_model(const RotationParams& p) {
    ModelSpec s;
    s.name = "rotation";
    s.dim = 2;
    const double q = 2.0 * pi / p.length;
    s.fiber_hamiltonian = [p, q](double x) {
        const double th = p.theta0 + p.theta_amp * std::sin(q * x);
        const double e = p.half_gap + p.gap_mod * std::cos(q * x);
        const double ph = p.phase_amp * std::cos(q * x) + p.phase_amp2 * std::sin(2.0 * q * x);
        const double v = p.shift_amp * std::sin(q * x);
        CMat h(2, 2);
        h(0, 0) = v - e * std::cos(th);
        h(1, 1) = v + e * std::cos(th);
        h(0, 1) = e * std::sin(th) * std::exp(cplx(0.0, -ph));
        h(1, 0) = std::conj(h(0, 1));
        return h;
    };
    const CMat mu = p.dipole.size() ? p.dipole : pauli_x();
    s.dipole = [mu](double) { return mu; };
    s.lambda0 = p.lambda0;
    s.band_i = 0;
    s.band_j = 1;
    return s;
}

FiberField sample_hamiltonian(const ModelSpec& spec, const Grid1D& grid) {
    return sample_field(grid, spec.dim, spec.fiber_hamiltonian);
}

FiberField sample_dipole(const ModelSpec& spec, const Grid1D& grid) {
    return sample_field(grid, spec.dim, spec.dipole);
}

}  // namespace bornrad
