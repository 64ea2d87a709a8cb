#pragma once

#include <cstdint>
#include <random>

namespace bispect {

/// SplitMix64 step; used to derive independent stream seeds from (seed, ids...).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic per-stream generator. Streams are addressed by (seed, stream_id,
/// counter), so a frame's samples are identical whether frames are generated serially
/// or in parallel. Sampling algorithms are fixed here (never std::*_distribution,
/// whose output is implementation-defined).
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s ^= 0x6a09e667f3bcc909ULL + stream_id;
        std::uint64_t b = splitmix64(s);
        s ^= 0xbb67ae8584caa73bULL + counter;
        std::uint64_t c = splitmix64(s);
        engine_.seed(a ^ (b * 0x9e3779b97f4a7c15ULL) ^ (c << 1));
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double gaussian();

    /// Poisson sample: exact inversion below mean 50, rounded clipped normal
    /// approximation above.
    long long poisson(double mean);

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bispect
