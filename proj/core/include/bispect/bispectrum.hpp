#pragma once

#include <string>
#include <vector>

#include "bispect/fft.hpp"
#include "bispect/phase_index.hpp"
#include "bispect/sparse.hpp"
#include "bispect/vec.hpp"

namespace bispect {

struct Triplet {
    FreqCoord u, v;  // third leg is u + v
};

/// Triplet list plus the sparse phase-to-bispectrum operator A (m x n). Row r of A
/// encodes +1 at index(u), +1 at index(v), -1 at index(u+v); symmetry signs are folded
/// in and coincident entries merged, so stored values lie in {-2,-1,+1,+2} with at
/// most 3 structural nonzeros per row. Immutable after build (shared freely across
/// threads).
struct BispectrumIndex {
    PhaseIndexMap map;
    double inner_radius = 0.0;
    std::vector<Triplet> triplets;
    SparseCSR A;

    int m() const { return static_cast<int>(triplets.size()); }
    int n() const { return map.size(); }
};

/// Enumerates triplets with |u| <= R, |v| <= inner_radius, |u+v| <= R (Euclidean),
/// excluding any leg at D.C. and keeping u <= v in raster order whenever both
/// orderings are enumerable (|u| <= inner_radius). Requires inner_radius <= R.
BispectrumIndex build_index(const PhaseIndexMap& map, double inner_radius);

/// Accumulated modulo-2pi bispectrum phases, SNR weights, and (when recovered
/// separately) the Fourier modulus on the full grid.
struct BispectrumData {
    Vector beta;     // m, in [-pi, pi)
    Vector weights;  // m, positive
    Vector modulus;  // N*N or empty
};

/// Means the per-frame triple products I(u) I(v) conj(I(u+v)) over frames, then takes
/// beta = wrap(arg(mean)) and weight = |mean| / (sample std of the complex fluctuation
/// + 1e-8), floored at 1e-8. Zero sample variance (single frame, or bitwise-identical
/// frames) yields weight 1.
BispectrumData accumulate_bispectrum(const std::vector<ComplexGrid>& frame_ffts,
                                     const BispectrumIndex& index);

/// Binary sidecar (magic "BIDX", little-endian) so repeated experiments skip the
/// enumeration; layout documented in the README.
void save_index(const std::string& path, const BispectrumIndex& index);
BispectrumIndex load_index(const std::string& path);

}  // namespace bispect
