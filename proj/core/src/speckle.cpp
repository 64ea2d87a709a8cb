#include "bispect/speckle.hpp"

#include <cmath>
#include <stdexcept>

namespace bispect {
namespace {

constexpr int kSubharmonicLevels = 3;

double mode_sigma(double fried, double f_cyc_per_aperture, double cell_area) {
    const double power =
        0.023 * std::pow(fried, 5.0 / 3.0) * std::pow(f_cyc_per_aperture, -11.0 / 3.0);
    return std::sqrt(power * cell_area);
}

}  // namespace

Vector generate_phase_screen(int n, double fried, RandomStream& rng) {
    if (n <= 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("generate_phase_screen: n must be a power of two");
    if (!(fried >= 0.0)) throw std::invalid_argument("generate_phase_screen: fried must be >= 0");

    // Main grid: one complex Gaussian per mode, shaped by the Kolmogorov spectrum.
    // One integer frequency step is 1/2 cycle per aperture (aperture diameter n/2).
    ComplexGrid spec(n, n);
    for (int r = 0; r < n; ++r) {
        const int fi = r <= n / 2 ? r : r - n;
        for (int c = 0; c < n; ++c) {
            const int fj = c <= n / 2 ? c : c - n;
            const double g1 = rng.gaussian();
            const double g2 = rng.gaussian();
            if (fi == 0 && fj == 0) {
                spec.at(r, c) = Complex(0.0, 0.0);
                continue;
            }
            const double f = 0.5 * std::sqrt(static_cast<double>(fi) * fi +
                                             static_cast<double>(fj) * fj);
            const double s = mode_sigma(fried, f, 0.25);
            spec.at(r, c) = Complex(g1 * s, g2 * s);
        }
    }
    fft2_forward(spec);
    Vector screen(static_cast<std::size_t>(n) * n);
    for (std::size_t i = 0; i < screen.size(); ++i) screen[i] = spec.data[i].real();

    // Subharmonic levels restore the variance the integer grid truncates below one
    // cycle per image.
    for (int level = 1; level <= kSubharmonicLevels; ++level) {
        const double step = std::pow(3.0, -level);
        for (int p = -1; p <= 1; ++p) {
            for (int q = -1; q <= 1; ++q) {
                const double g1 = rng.gaussian();
                const double g2 = rng.gaussian();
                if (p == 0 && q == 0) continue;
                const double ki = p * step;
                const double kj = q * step;
                const double f = 0.5 * std::hypot(ki, kj);
                const double s = mode_sigma(fried, f, 0.25 * step * step);
                const Complex c0(g1 * s, g2 * s);
                for (int r = 0; r < n; ++r) {
                    const double ar = 2.0 * M_PI * ki * r / n;
                    const Complex row = c0 * Complex(std::cos(ar), std::sin(ar));
                    double* dst = screen.data() + static_cast<std::size_t>(r) * n;
                    for (int c = 0; c < n; ++c) {
                        const double ac = 2.0 * M_PI * kj * c / n;
                        dst[c] += row.real() * std::cos(ac) - row.imag() * std::sin(ac);
                    }
                }
            }
        }
    }

    double mean = 0.0;
    for (double v : screen) mean += v;
    mean /= static_cast<double>(screen.size());
    for (double& v : screen) v -= mean;
    return screen;
}

Vector generate_psf(const Vector& screen, int n) {
    if (screen.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("generate_psf: screen size mismatch");
    const double ap_radius = n / 4.0;
    ComplexGrid pupil(n, n);
    for (int r = 0; r < n; ++r) {
        const int fi = r <= n / 2 ? r : r - n;
        for (int c = 0; c < n; ++c) {
            const int fj = c <= n / 2 ? c : c - n;
            if (static_cast<double>(fi) * fi + static_cast<double>(fj) * fj <=
                ap_radius * ap_radius) {
                const double ph = screen[static_cast<std::size_t>(r) * n + c];
                pupil.at(r, c) = Complex(std::cos(ph), std::sin(ph));
            }
        }
    }
    fft2_inverse(pupil);
    Vector psf(static_cast<std::size_t>(n) * n);
    double total = 0.0;
    for (std::size_t i = 0; i < psf.size(); ++i) {
        psf[i] = std::norm(pupil.data[i]);
        total += psf[i];
    }
    for (double& v : psf) v /= total;
    return psf;
}

FrameSet simulate_frames(const Vector& object, const SimulationConfig& cfg, FrameSet::Kind kind) {
    const int n = cfg.image_side;
    if (object.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("simulate_frames: object size mismatch");
    double total = 0.0;
    for (double v : object) {
        if (v < 0.0) throw std::invalid_argument("simulate_frames: object must be non-negative");
        total += v;
    }
    if (!(total > 0.0)) throw std::invalid_argument("simulate_frames: object must have positive flux");

    const double photons =
        kind == FrameSet::Kind::Object ? cfg.photons_object : cfg.photons_star;
    ComplexGrid obj_fft(n, n);
    for (std::size_t i = 0; i < object.size(); ++i) obj_fft.data[i] = Complex(object[i] / total, 0.0);
    fft2_forward(obj_fft);

    FrameSet out;
    out.kind = kind;
    out.image_side = n;
    out.frames.resize(cfg.n_frames);
    for (int k = 0; k < cfg.n_frames; ++k) {
        RandomStream rng(cfg.rng_seed, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(k));
        const Vector screen = generate_phase_screen(n, cfg.fried, rng);
        const Vector psf = generate_psf(screen, n);

        ComplexGrid blur = fft2_of_real(psf, n, n);
        for (std::size_t i = 0; i < blur.data.size(); ++i) blur.data[i] *= obj_fft.data[i];
        fft2_inverse(blur);

        Vector& frame = out.frames[k];
        frame.resize(static_cast<std::size_t>(n) * n);
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const double mean = photons * std::max(0.0, blur.data[i].real());
            frame[i] = static_cast<double>(rng.poisson(mean));
        }
        if (cfg.sigma_rn > 0.0) {
            for (double& v : frame) v += cfg.sigma_rn * rng.gaussian();
        }
    }
    return out;
}

Vector recover_modulus(const FrameSet& object_frames, const FrameSet& star_frames) {
    if (object_frames.frames.empty() || star_frames.frames.empty())
        throw std::invalid_argument("recover_modulus: empty frame set");
    const int n = object_frames.image_side;
    if (star_frames.image_side != n)
        throw std::invalid_argument("recover_modulus: frame size mismatch");

    const auto mean_power = [n](const FrameSet& fs) {
        Vector acc(static_cast<std::size_t>(n) * n, 0.0);
        for (const Vector& frame : fs.frames) {
            ComplexGrid g = fft2_of_real(frame, n, n);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(g.data[i]);
        }
        for (double& v : acc) v /= static_cast<double>(fs.frames.size());
        return acc;
    };

    const Vector pi = mean_power(object_frames);
    const Vector ps = mean_power(star_frames);
    Vector modulus(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i)
        modulus[i] = std::sqrt(std::max(0.0, pi[i] / (ps[i] + 1e-8)));

    double mean_flux = 0.0;
    for (const Vector& frame : object_frames.frames) {
        double s = 0.0;
        for (double v : frame) s += v;
        mean_flux += s;
    }
    mean_flux /= static_cast<double>(object_frames.frames.size());
    if (modulus[0] > 0.0) {
        const double scalefac = mean_flux / modulus[0];
        for (double& v : modulus) v *= scalefac;
    }
    return modulus;
}

}  // namespace bispect
