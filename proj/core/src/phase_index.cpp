#include "bispect/phase_index.hpp"

namespace bispect {

PhaseIndexMap build_phase_map(int image_side, double recovery_radius) {
    if (image_side <= 0) throw std::invalid_argument("build_phase_map: image_side must be positive");
    if (!(recovery_radius > 0.0) || !(recovery_radius < image_side / 2.0))
        throw std::invalid_argument("build_phase_map: need 0 < recovery_radius < image_side/2");

    PhaseIndexMap map;
    map.image_side_ = image_side;
    map.radius_ = recovery_radius;
    map.bound_ = static_cast<int>(std::floor(recovery_radius));
    const int b = map.bound_;
    map.table_.assign(static_cast<std::size_t>(2 * b + 1) * (2 * b + 1), PhaseIndexEntry{});

    const double r2 = recovery_radius * recovery_radius;
    auto slot = [&](FreqCoord c) -> PhaseIndexEntry& {
        return map.table_[static_cast<std::size_t>((c.i + b) * (2 * b + 1) + (c.j + b))];
    };

    // Raster order over the half plane (i > 0) or (i == 0 and j > 0).
    for (int i = 0; i <= b; ++i) {
        for (int j = (i == 0 ? 1 : -b); j <= b; ++j) {
            FreqCoord c{i, j};
            if (c.is_dc()) continue;
            if (static_cast<double>(c.radius2()) > r2) continue;
            const int k = static_cast<int>(map.reps_.size());
            map.reps_.push_back(c);
            slot(c) = {k, +1};
            slot(-c) = {k, -1};
        }
    }
    if (map.reps_.empty())
        throw std::invalid_argument("build_phase_map: no unknowns inside recovery_radius");
    return map;
}

}  // namespace bispect
