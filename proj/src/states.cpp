#include "bornrad/states.hpp"

#include <cmath>
#include <cstring>

#include "bornrad/errors.hpp"
#include "bornrad/rng.hpp"

namespace bornrad {

DressedState vacuum_dressed(const CVec& molecular, int n_points, int dim, int modes) {
    DressedState s{n_points, dim, modes, CVec::Zero(static_cast<Eigen::Index>(n_points) * dim * (1 + modes))};
    if (molecular.size() != s.block()) throw DimensionMismatch("molecular state length");
    s.sector(0) = molecular;
    return s;
}

CVec gaussian_packet(const Grid1D& grid, const PacketParams& p, double eps) {
    const int n = grid.n_points;
    const double L = grid.length;
    const double m = std::round(p.momentum * L / (2.0 * pi * eps));
    CVec f(n);
    for (int k = 0; k < n; ++k) {
        const double x = grid.point(k);
        double dx = std::fmod(x - p.x0, L);
        if (dx < -0.5 * L) dx += L;
        if (dx >= 0.5 * L) dx -= L;
        f[k] = std::exp(-dx * dx / (2.0 * p.width * p.width)) *
               std::exp(cplx(0.0, 2.0 * pi * m * x / L));
    }
    return f / f.norm();
}

CVec product_state(const CVec& nuclear, const CMat& vectors) {
    const int n = static_cast<int>(nuclear.size());
    const int d = static_cast<int>(vectors.cols());
    CVec out(static_cast<Eigen::Index>(n) * d);
    for (int c = 0; c < d; ++c)
        for (int k = 0; k < n; ++k) out[c * n + k] = nuclear[k] * vectors(k, c);
    return out;
}

CVec product_state(const CVec& nuclear, const CVec& electronic) {
    const int n = static_cast<int>(nuclear.size());
    const int d = static_cast<int>(electronic.size());
    CVec out(static_cast<Eigen::Index>(n) * d);
    for (int c = 0; c < d; ++c)
        for (int k = 0; k < n; ++k) out[c * n + k] = nuclear[k] * electronic[c];
    return out;
}

std::vector<CVec> low_energy_batch(const Grid1D& grid, int dim, double eps, const BatchSpec& spec,
                                   const BandData* band) {
    CounterRng rng(spec.seed, spec.purpose);
    std::vector<CVec> out;
    out.reserve(spec.count);
    const CMat vecs = band ? band->periodic_vectors() : CMat();
    for (int b = 0; b < spec.count; ++b) {
        PacketParams p;
        p.x0 = rng.uniform(0.0, grid.length);
        p.momentum = rng.uniform(-spec.pmax, spec.pmax);
        p.width = spec.width;
        const CVec f = gaussian_packet(grid, p, eps);
        CVec v(dim);
        for (int c = 0; c < dim; ++c) v[c] = cplx(rng.normal(), rng.normal());
        v.normalize();
        CVec psi = band ? product_state(f, vecs) : product_state(f, v);
        out.push_back(psi / psi.norm());
    }
    return out;
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& s, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(s, v);
}

struct Reader {
    const std::string& s;
    size_t pos = 0;
    std::uint64_t u(int bytes) {
        if (pos + bytes > s.size()) throw ValidationError("checkpoint truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
        pos += bytes;
        return v;
    }
    double f() {
        const std::uint64_t v = u(8);
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
    void magic(const char* m) {
        if (s.size() < 4 || s.compare(0, 4, m) != 0)
            throw ValidationError(std::string("checkpoint magic mismatch, expected ") + m);
        pos = 4;
    }
};

void put_amplitudes(std::string& s, const CVec& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        put_f64(s, a[i].real());
        put_f64(s, a[i].imag());
    }
}

CVec get_amplitudes(Reader& r, Eigen::Index count) {
    CVec a(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const double re = r.f();
        const double im = r.f();
        a[i] = cplx(re, im);
    }
    if (r.pos != r.s.size()) throw ValidationError("checkpoint has trailing bytes");
    return a;
}

constexpr std::uint32_t kVersion = 1;

}  // namespace

std::string encode_state(const MolecularState& st) {
    std::string s = "BRMS";
    put_u32(s, kVersion);
    put_u64(s, static_cast<std::uint64_t>(st.n_points));
    put_u64(s, static_cast<std::uint64_t>(st.dim));
    put_amplitudes(s, st.amp);
    return s;
}

std::string encode_state(const DressedState& st) {
    std::string s = "BRDS";
    put_u32(s, kVersion);
    put_u64(s, static_cast<std::uint64_t>(st.n_points));
    put_u64(s, static_cast<std::uint64_t>(st.dim));
    put_u64(s, static_cast<std::uint64_t>(st.modes));
    put_amplitudes(s, st.amp);
    return s;
}

MolecularState decode_molecular(const std::string& bytes) {
    Reader r{bytes};
    r.magic("BRMS");
    if (r.u(4) != kVersion) throw ValidationError("unsupported checkpoint version");
    MolecularState st;
    st.n_points = static_cast<int>(r.u(8));
    st.dim = static_cast<int>(r.u(8));
    st.amp = get_amplitudes(r, static_cast<Eigen::Index>(st.n_points) * st.dim);
    return st;
}

DressedState decode_dressed(const std::string& bytes) {
    Reader r{bytes};
    r.magic("BRDS");
    if (r.u(4) != kVersion) throw ValidationError("unsupported checkpoint version");
    DressedState st;
    st.n_points = static_cast<int>(r.u(8));
    st.dim = static_cast<int>(r.u(8));
    st.modes = static_cast<int>(r.u(8));
    st.amp = get_amplitudes(r, st.block() * (1 + st.modes));
    return st;
}

}  // namespace bornrad
