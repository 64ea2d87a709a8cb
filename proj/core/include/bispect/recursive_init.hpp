#pragma once

#include <utility>

#include "bispect/bispectrum.hpp"
#include "bispect/vec.hpp"

namespace bispect {

/// Recursive phase bootstrap. Seeds (|u| <= 1 set to phase 0 by default, or the
/// caller-supplied index/value pairs) anchor the recursion; unknowns are visited by
/// increasing |u+v| and each receives the SNR-weighted circular mean of
/// phi(u) + phi(v) - beta over the triplets whose legs are already known. Unknowns
/// never reached stay 0.
Vector recursive_phase(const BispectrumData& data, const BispectrumIndex& index,
                       const std::vector<std::pair<int, double>>* seeds = nullptr);

/// Real part of the inverse FFT of modulus .* exp(i phi) after conjugate-symmetric
/// expansion of the indexed phases; phase 0 outside the recovery disc. The discarded
/// imaginary part's relative norm is reported through imag_residue when non-null.
Vector synthesize_image(const Vector& phi, const Vector& modulus, const PhaseIndexMap& map,
                        double* imag_residue = nullptr);

/// Euclidean projection onto {o >= 0, sum o = sum input} (water filling on the
/// descending sort), then + epsilon everywhere. Requires a positive input sum.
Vector project_energy_preserving(const Vector& o, double epsilon);

}  // namespace bispect
