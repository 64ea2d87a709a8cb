#include "bispect/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace bispect {

double RandomStream::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 is kept away from 0 so log() is finite.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

long long RandomStream::poisson(double mean) {
    if (!std::isfinite(mean)) throw std::invalid_argument("poisson: non-finite mean");
    if (mean <= 0.0) return 0;
    if (mean < 50.0) {
        // Inversion by sequential search; exact for small means.
        const double p0 = std::exp(-mean);
        double p = p0;
        double cdf = p;
        long long k = 0;
        const double u = uniform();
        while (u > cdf) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
            if (k > 2000) break;  // u in a denormal tail; cdf has saturated
        }
        return k;
    }
    const double x = mean + std::sqrt(mean) * gaussian();
    return static_cast<long long>(std::llround(std::max(0.0, x)));
}

}  // namespace bispect
