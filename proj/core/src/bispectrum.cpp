#include "bispect/bispectrum.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace bispect {

BispectrumIndex build_index(const PhaseIndexMap& map, double inner_radius) {
    if (!(inner_radius > 0.0) || inner_radius > map.recovery_radius())
        throw std::invalid_argument("build_index: need 0 < inner_radius <= recovery_radius");

    BispectrumIndex index;
    index.map = map;
    index.inner_radius = inner_radius;

    const double R2 = map.recovery_radius() * map.recovery_radius();
    const double r2 = inner_radius * inner_radius;
    const int bv = static_cast<int>(std::floor(inner_radius));
    const int bu = static_cast<int>(std::floor(map.recovery_radius()));

    std::vector<int> rows, cols;
    std::vector<double> vals;
    for (int vi = -bv; vi <= bv; ++vi) {
        for (int vj = -bv; vj <= bv; ++vj) {
            const FreqCoord v{vi, vj};
            if (v.is_dc() || static_cast<double>(v.radius2()) > r2) continue;
            for (int ui = -bu; ui <= bu; ++ui) {
                for (int uj = -bu; uj <= bu; ++uj) {
                    const FreqCoord u{ui, uj};
                    if (u.is_dc() || static_cast<double>(u.radius2()) > R2) continue;
                    const FreqCoord s = u + v;
                    if (s.is_dc() || static_cast<double>(s.radius2()) > R2) continue;
                    // (v, u) is enumerable iff |u| <= inner_radius; keep u <= v then.
                    if (static_cast<double>(u.radius2()) <= r2 && v < u) continue;

                    const int row = static_cast<int>(index.triplets.size());
                    index.triplets.push_back({u, v});
                    const auto add = [&](FreqCoord c, double coeff) {
                        const auto e = *map.lookup(c);
                        rows.push_back(row);
                        cols.push_back(e.index);
                        vals.push_back(coeff * e.sign);
                    };
                    add(u, +1.0);
                    add(v, +1.0);
                    add(s, -1.0);
                }
            }
        }
    }
    index.A = csr_from_triplets(index.m(), map.size(), rows, cols, vals);
    return index;
}

BispectrumData accumulate_bispectrum(const std::vector<ComplexGrid>& frame_ffts,
                                     const BispectrumIndex& index) {
    if (frame_ffts.empty()) throw std::invalid_argument("accumulate_bispectrum: no frames");
    const int N = index.map.image_side();
    for (const auto& g : frame_ffts) {
        if (g.rows != N || g.cols != N)
            throw std::invalid_argument("accumulate_bispectrum: frame grid size mismatch");
    }
    const int m = index.m();
    const std::size_t K = frame_ffts.size();

    BispectrumData data;
    data.beta.resize(m);
    data.weights.resize(m);

    std::vector<Complex> prods(K);
    for (int t = 0; t < m; ++t) {
        const FreqCoord u = index.triplets[t].u;
        const FreqCoord v = index.triplets[t].v;
        const FreqCoord s = u + v;
        Complex mean(0.0, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const ComplexGrid& g = frame_ffts[k];
            const Complex p = g.at_freq(u.i, u.j) * g.at_freq(v.i, v.j) * std::conj(g.at_freq(s.i, s.j));
            prods[k] = p;
            mean += p;
        }
        mean /= static_cast<double>(K);
        data.beta[t] = wrap_phase(std::arg(mean));

        double var = 0.0;
        if (K > 1) {
            for (std::size_t k = 0; k < K; ++k) var += std::norm(prods[k] - mean);
            var /= static_cast<double>(K - 1);
        }
        const double sd = std::sqrt(var);
        // Exactly repeated frames carry no fluctuation information: weight 1, the
        // same as a single noiseless frame.
        const double w = sd == 0.0 ? 1.0 : std::abs(mean) / (sd + 1e-8);
        data.weights[t] = std::max(w, 1e-8);
    }
    return data;
}

// ---------------------------------------------------------------------------
// BIDX sidecar
// ---------------------------------------------------------------------------
namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                   static_cast<unsigned char>(v >> 16),
                                   static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b;
    is.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::int32_t get_i32(std::istream& is) { return static_cast<std::int32_t>(get_u32(is)); }

double get_f64(std::istream& is) {
    std::array<unsigned char, 8> b;
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace

void save_index(const std::string& path, const BispectrumIndex& index) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_index: cannot open " + path);
    os.write("BIDX", 4);
    put_u32(os, 1);  // version
    put_u32(os, static_cast<std::uint32_t>(index.map.image_side()));
    put_u32(os, static_cast<std::uint32_t>(index.n()));
    put_u32(os, static_cast<std::uint32_t>(index.m()));
    put_u32(os, static_cast<std::uint32_t>(index.A.nnz()));
    put_f64(os, index.map.recovery_radius());
    put_f64(os, index.inner_radius);
    for (const Triplet& t : index.triplets) {
        put_i32(os, t.u.i);
        put_i32(os, t.u.j);
        put_i32(os, t.v.i);
        put_i32(os, t.v.j);
    }
    for (int v : index.A.row_ptr) put_u32(os, static_cast<std::uint32_t>(v));
    for (int v : index.A.col_idx) put_u32(os, static_cast<std::uint32_t>(v));
    for (double v : index.A.values) put_f64(os, v);
    if (!os) throw std::runtime_error("save_index: write failed for " + path);
}

BispectrumIndex load_index(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_index: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BIDX", 4) != 0)
        throw std::runtime_error("load_index: bad magic in " + path);
    if (get_u32(is) != 1) throw std::runtime_error("load_index: unsupported version in " + path);
    const auto image_side = static_cast<int>(get_u32(is));
    const auto n = static_cast<int>(get_u32(is));
    const auto m = static_cast<int>(get_u32(is));
    const auto nnz = static_cast<int>(get_u32(is));
    const double radius = get_f64(is);
    const double inner = get_f64(is);

    BispectrumIndex index;
    index.map = build_phase_map(image_side, radius);
    index.inner_radius = inner;
    if (index.map.size() != n) throw std::runtime_error("load_index: unknown count mismatch");
    index.triplets.resize(m);
    for (Triplet& t : index.triplets) {
        t.u.i = get_i32(is);
        t.u.j = get_i32(is);
        t.v.i = get_i32(is);
        t.v.j = get_i32(is);
    }
    index.A.n_rows = m;
    index.A.n_cols = n;
    index.A.row_ptr.resize(m + 1);
    for (int& v : index.A.row_ptr) v = static_cast<int>(get_u32(is));
    index.A.col_idx.resize(nnz);
    for (int& v : index.A.col_idx) v = static_cast<int>(get_u32(is));
    index.A.values.resize(nnz);
    for (double& v : index.A.values) v = get_f64(is);
    if (!is) throw std::runtime_error("load_index: truncated file " + path);
    return index;
}

}  // namespace bispect
