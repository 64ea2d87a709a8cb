#pragma once

#include <complex>
#include <vector>

#include "bispect/vec.hpp"

namespace bispect {

using Complex = std::complex<double>;

/// Row-major complex grid. Frequency-domain grids use wrap-around (DFT) layout:
/// the signed frequency (fi, fj) lives at array position (fi mod rows, fj mod cols).
struct ComplexGrid {
    int rows = 0;
    int cols = 0;
    std::vector<Complex> data;

    ComplexGrid() = default;
    ComplexGrid(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

    Complex& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const Complex& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    /// Access by signed frequency offsets from D.C.
    Complex& at_freq(int fi, int fj) { return at(wrap_index(fi, rows), wrap_index(fj, cols)); }
    const Complex& at_freq(int fi, int fj) const {
        return at(wrap_index(fi, rows), wrap_index(fj, cols));
    }

    static int wrap_index(int f, int n) {
        int r = f % n;
        return r < 0 ? r + n : r;
    }
};

/// Unnormalized forward DFT in place. Thread-safe (plans are cached under a mutex).
void fft2_forward(ComplexGrid& g);

/// Inverse DFT in place, scaled by 1/(rows*cols) so that ifft(fft(x)) == x.
void fft2_inverse(ComplexGrid& g);

/// Forward DFT of a real row-major image.
ComplexGrid fft2_of_real(const Vector& image, int rows, int cols);

/// Real part of the inverse DFT; the discarded imaginary residue's 2-norm is reported
/// through `imag_residue` when non-null.
Vector ifft2_real(const ComplexGrid& g, double* imag_residue = nullptr);

}  // namespace bispect
