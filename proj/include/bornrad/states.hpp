#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bornrad/bands.hpp"

namespace bornrad {

// Stacked layout: amp[c * n + k].
struct MolecularState {
    int n_points = 0;
    int dim = 0;
    CVec amp;

    double norm() const { return amp.norm(); }
};

// Sector s = 0 is the vacuum, s = 1 + m the one-photon mode m; each sector is a
// molecular block of length n * dim.
struct DressedState {
    int n_points = 0;
    int dim = 0;
    int modes = 0;
    CVec amp;

    Eigen::Index block() const { return static_cast<Eigen::Index>(n_points) * dim; }
    auto sector(int s) { return amp.segment(s * block(), block()); }
    auto sector(int s) const { return amp.segment(s * block(), block()); }
    double norm() const { return amp.norm(); }
};

DressedState vacuum_dressed(const CVec& molecular, int n_points, int dim, int modes);

// Gaussian nuclear packet centred at x0 (periodic distance) with mean momentum
// `momentum` in units of eps * k; the wavenumber is rounded to the grid so the
// packet is exactly periodic.
struct PacketParams {
    double x0 = 0.0;
    double momentum = 0.0;
    double width = 0.5;
};
CVec gaussian_packet(const Grid1D& grid, const PacketParams& p, double eps);

// phi(x) * v(x) with v taken row-wise from `vectors` (n x d).
CVec product_state(const CVec& nuclear, const CMat& vectors);
// phi(x) * v for a constant electronic vector.
CVec product_state(const CVec& nuclear, const CVec& electronic);

// Low-energy batch: packets with momentum in [-pmax, pmax], centres uniform,
// fixed width. With `band` non-null the electronic factor is the band's
// periodic eigenvector; otherwise a random constant unit vector.
struct BatchSpec {
    int count = 16;
    double pmax = 1.0;
    double width = 0.5;
    std::uint64_t seed = 1;
    std::string purpose = "batch";
};
std::vector<CVec> low_energy_batch(const Grid1D& grid, int dim, double eps, const BatchSpec& spec,
                                   const BandData* band = nullptr);

// Little-endian checkpoints: "BRMS" u32 version u64 n u64 d, then n*d
// interleaved (re, im) doubles. Dressed: "BRDS" u32 version u64 n u64 d u64 M.
std::string encode_state(const MolecularState& s);
std::string encode_state(const DressedState& s);
MolecularState decode_molecular(const std::string& bytes);
DressedState decode_dressed(const std::string& bytes);

}  // namespace bornrad
