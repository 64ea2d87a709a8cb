#include "bispect/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace bispect {
namespace {

// FFTW planning is not thread-safe; execution via fftw_execute_dft is. Plans are
// created once per (rows, cols, direction) with FFTW_ESTIMATE so results do not
// depend on accumulated wisdom, and FFTW_UNALIGNED so they apply to any buffer.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan get_plan(int rows, int cols, int sign) {
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto key = std::make_tuple(rows, cols, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<Complex> scratch(static_cast<std::size_t>(rows) * cols);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw planning failed");
    cache.emplace(key, plan);
    return plan;
}

void execute(ComplexGrid& g, int sign) {
    if (g.rows <= 0 || g.cols <= 0) throw std::invalid_argument("fft2: empty grid");
    fftw_plan plan = get_plan(g.rows, g.cols, sign);
    auto* p = reinterpret_cast<fftw_complex*>(g.data.data());
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void fft2_forward(ComplexGrid& g) { execute(g, FFTW_FORWARD); }

void fft2_inverse(ComplexGrid& g) {
    execute(g, FFTW_BACKWARD);
    const double s = 1.0 / (static_cast<double>(g.rows) * g.cols);
    for (Complex& z : g.data) z *= s;
}

ComplexGrid fft2_of_real(const Vector& image, int rows, int cols) {
    if (static_cast<std::size_t>(rows) * cols != image.size())
        throw std::invalid_argument("fft2_of_real: size mismatch");
    ComplexGrid g(rows, cols);
    for (std::size_t i = 0; i < image.size(); ++i) g.data[i] = Complex(image[i], 0.0);
    fft2_forward(g);
    return g;
}

Vector ifft2_real(const ComplexGrid& g, double* imag_residue) {
    ComplexGrid tmp = g;
    fft2_inverse(tmp);
    Vector out(tmp.data.size());
    double res2 = 0.0;
    for (std::size_t i = 0; i < tmp.data.size(); ++i) {
        out[i] = tmp.data[i].real();
        res2 += tmp.data[i].imag() * tmp.data[i].imag();
    }
    if (imag_residue) *imag_residue = std::sqrt(res2);
    return out;
}

}  // namespace bispect
