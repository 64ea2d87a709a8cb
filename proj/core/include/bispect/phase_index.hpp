#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace bispect {

/// Signed integer frequency offsets from D.C.
struct FreqCoord {
    int i = 0;
    int j = 0;

    bool operator==(const FreqCoord&) const = default;
    FreqCoord operator+(const FreqCoord& o) const { return {i + o.i, j + o.j}; }
    FreqCoord operator-() const { return {-i, -j}; }
    long long radius2() const {
        return static_cast<long long>(i) * i + static_cast<long long>(j) * j;
    }
    bool is_dc() const { return i == 0 && j == 0; }
    /// Raster (lexicographic) order.
    bool operator<(const FreqCoord& o) const { return i != o.i ? i < o.i : j < o.j; }
};

/// Principal value of x in [-pi, pi): x - 2*pi*round(x/2*pi) with round-half-to-even,
/// then +pi folded to -pi.
inline double wrap_phase(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("wrap_phase: non-finite input");
    double r = std::remainder(x, 2.0 * M_PI);
    if (r >= M_PI) r = -M_PI;  // remainder may return +pi exactly
    return r;
}

struct PhaseIndexEntry {
    int index = -1;
    int sign = 0;  // +1 at the stored representative, -1 at its conjugate mirror
};

/// Maps the frequencies u with 0 < |u| <= recovery_radius to unknown indices. One
/// representative per conjugate pair is stored: the half plane (i > 0) or
/// (i == 0 and j > 0), numbered in raster order. At the mirror coordinate the phase is
/// the negated unknown, encoded by sign = -1. D.C. carries phase 0 and has no index.
class PhaseIndexMap {
public:
    PhaseIndexMap() = default;

    int image_side() const { return image_side_; }
    double recovery_radius() const { return radius_; }
    int size() const { return static_cast<int>(reps_.size()); }

    /// Index/sign for a coordinate inside the disc, std::nullopt outside (and at D.C.).
    std::optional<PhaseIndexEntry> lookup(FreqCoord c) const {
        const int b = bound_;
        if (c.i < -b || c.i > b || c.j < -b || c.j > b) return std::nullopt;
        const int at = (c.i + b) * (2 * b + 1) + (c.j + b);
        if (table_[at].sign == 0) return std::nullopt;
        return table_[at];
    }

    FreqCoord representative(int k) const { return reps_[k]; }

    friend PhaseIndexMap build_phase_map(int image_side, double recovery_radius);

private:
    int image_side_ = 0;
    double radius_ = 0.0;
    int bound_ = 0;
    std::vector<PhaseIndexEntry> table_;  // dense (2*bound+1)^2 lookup
    std::vector<FreqCoord> reps_;
};

/// Enumerates the half-plane disc. Requires 0 < recovery_radius < image_side/2 and a
/// nonempty unknown set.
PhaseIndexMap build_phase_map(int image_side, double recovery_radius);

}  // namespace bispect
