#include "bispect/recursive_init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bispect/fft.hpp"

namespace bispect {

Vector recursive_phase(const BispectrumData& data, const BispectrumIndex& index,
                       const std::vector<std::pair<int, double>>* seeds) {
    const PhaseIndexMap& map = index.map;
    const int n = map.size();
    const int m = index.m();
    if (data.beta.size() != static_cast<std::size_t>(m) ||
        data.weights.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("bispectrum data does not match the index");
    }
    Vector phi(n, 0.0);
    std::vector<char> known(n, 0);
    if (seeds) {
        for (const auto& [k, v] : *seeds) {
            if (k < 0 || k >= n) throw std::invalid_argument("seed index out of range");
            phi[k] = v;
            known[k] = 1;
        }
    } else {
        for (int k = 0; k < n; ++k) {
            if (map.representative(k).radius2() <= 1) known[k] = 1;  // phase stays 0
        }
    }

    // Triplets grouped by the unknown their u+v leg lands on.
    std::vector<std::vector<int>> incoming(n);
    for (int t = 0; t < m; ++t) {
        const FreqCoord w = index.triplets[t].u + index.triplets[t].v;
        const auto e = map.lookup(w);
        if (e) incoming[e->index].push_back(t);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const FreqCoord ca = map.representative(a);
        const FreqCoord cb = map.representative(b);
        if (ca.radius2() != cb.radius2()) return ca.radius2() < cb.radius2();
        return ca < cb;
    });

    auto signed_phase = [&](FreqCoord c) -> std::optional<double> {
        if (c.is_dc()) return 0.0;
        const auto e = map.lookup(c);
        if (!e || !known[e->index]) return std::nullopt;
        return e->sign * phi[e->index];
    };

    for (int k : order) {
        if (known[k]) continue;
        double acc_re = 0.0, acc_im = 0.0;
        for (int t : incoming[k]) {
            const Triplet& tr = index.triplets[t];
            const auto pu = signed_phase(tr.u);
            const auto pv = signed_phase(tr.v);
            if (!pu || !pv) continue;
            // Estimate of phi at u+v; fold onto the representative via its sign.
            const auto e = map.lookup(tr.u + tr.v);
            const double est = e->sign * (*pu + *pv - data.beta[t]);
            acc_re += data.weights[t] * std::cos(est);
            acc_im += data.weights[t] * std::sin(est);
        }
        if (acc_re != 0.0 || acc_im != 0.0) {
            phi[k] = wrap_phase(std::atan2(acc_im, acc_re));
            known[k] = 1;
        }
    }
    return phi;
}

Vector synthesize_image(const Vector& phi, const Vector& modulus, const PhaseIndexMap& map,
                        double* imag_residue) {
    const int n = map.image_side();
    if (phi.size() != static_cast<std::size_t>(map.size())) {
        throw std::invalid_argument("phase vector does not match the index");
    }
    if (modulus.size() != static_cast<std::size_t>(n) * n) {
        throw std::invalid_argument("modulus grid does not match the image side");
    }
    ComplexGrid g(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const int fi = r <= n / 2 ? r : r - n;
            const int fj = c <= n / 2 ? c : c - n;
            const double mod = modulus[static_cast<std::size_t>(r) * n + c];
            const auto e = map.lookup({fi, fj});
            const double ph = e ? e->sign * phi[e->index] : 0.0;
            g.at(r, c) = Complex(mod * std::cos(ph), mod * std::sin(ph));
        }
    }
    return ifft2_real(g, imag_residue);
}

Vector project_energy_preserving(const Vector& o, double epsilon) {
    if (o.empty()) throw std::invalid_argument("empty image");
    const double total = std::accumulate(o.begin(), o.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("image sum must be positive");

    const double lo = *std::min_element(o.begin(), o.end());
    Vector out = o;
    if (lo < 0.0) {
        // Water filling: tau is the largest threshold keeping the clipped sum equal
        // to the input sum; on the descending sort u, kappa = max{k : u_k > tau_k}.
        Vector u = o;
        std::sort(u.begin(), u.end(), std::greater<double>());
        double prefix = 0.0, tau = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            prefix += u[k];
            const double cand = (prefix - total) / static_cast<double>(k + 1);
            if (u[k] > cand) tau = cand;
        }
        for (double& x : out) x = std::max(x - tau, 0.0);
    }
    for (double& x : out) x += epsilon;
    return out;
}

}  // namespace bispect
