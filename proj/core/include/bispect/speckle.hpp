#pragma once

#include <cstdint>
#include <vector>

#include "bispect/fft.hpp"
#include "bispect/rng.hpp"
#include "bispect/vec.hpp"

namespace bispect {

struct SimulationConfig {
    int image_side = 64;         // N, power of two
    int n_frames = 50;
    double fried = 30.0;         // D/r0, aperture diameter over Fried parameter
    double photons_object = 3e6; // expected photo-events per object frame
    double photons_star = 5000;  // expected photo-events per reference-star frame
    double sigma_rn = 5.0;       // Gaussian read-noise std dev, counts/pixel
    std::uint64_t rng_seed = 1;
};

struct FrameSet {
    enum class Kind { Object = 0, Star = 1 };
    Kind kind = Kind::Object;
    int image_side = 0;
    std::vector<Vector> frames;
};

/// Zero-mean Kolmogorov turbulence screen (radians over the pupil grid): Fourier
/// synthesis with spectral power 0.023 (D/r0)^(5/3) f^(-11/3), f in cycles per
/// aperture (diameter n/2 pixels), plus three levels of subharmonic modes so the
/// low-frequency content - and hence the r^(5/3) structure-function law - survives
/// the finite grid.
Vector generate_phase_screen(int n, double fried, RandomStream& rng);

/// Unit-sum point spread function |IFFT(aperture * exp(i*screen))|^2; the aperture is
/// the centered disc of diameter n/2 in wrap-around frequency layout.
Vector generate_psf(const Vector& screen, int n);

///// Short-exposure frames: Poisson(photons * conv(object, psf_k)) + N(0, sigma_rn^2),
/// one independent turbulence screen per frame. Each frame owns its own counter-based
/// substream of cfg.rng_seed, so serial and parallel generation are bit-identical.
FrameSet simulate_frames(const Vector& object, const SimulationConfig& cfg, FrameSet::Kind kind);

/// Fourier modulus on the full grid via the mean power-spectrum ratio
/// sqrt(max(0, <|I|^2> / (<|S|^2> + 1e-8))), rescaled so the D.C. value equals the
/// mean object-frame total flux.
Vector recover_modulus(const FrameSet& object_frames, const FrameSet& star_frames);

}  // namespace bispect
