#include "bispect/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bispect {

namespace {

void check_dims(const Vector& image, int rows, int cols) {
    if (rows < 1 || cols < 1 || image.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("image size does not match rows x cols");
    }
}

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                   static_cast<unsigned char>(v >> 16),
                                   static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b;
    is.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

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

void write_pgm16(const std::string& path, const Vector& image, int rows, int cols) {
    check_dims(image, rows, cols);
    double lo = image[0], hi = image[0];
    for (double v : image) {
        if (!std::isfinite(v)) throw std::invalid_argument("write_pgm16: non-finite pixel");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_pgm16: cannot open " + path);
    char head[160];
    std::snprintf(head, sizeof(head), "P5\n# range %.17g %.17g\n%d %d\n65535\n", lo, hi, cols,
                  rows);
    os << head;
    const double span = hi - lo;
    for (double v : image) {
        const double t = span > 0.0 ? (v - lo) / span : 0.0;
        const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
        // PGM stores 16-bit samples most significant byte first.
        const unsigned char b[2] = {static_cast<unsigned char>(q >> 8),
                                    static_cast<unsigned char>(q & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 2);
    }
    if (!os) throw std::runtime_error("write_pgm16: write failed for " + path);
}

Vector read_pgm16(const std::string& path, int& rows, int& cols) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_pgm16: cannot open " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw std::runtime_error("read_pgm16: not a P5 file: " + path);

    double lo = 0.0, hi = 1.0;
    bool have_range = false;
    int fields[3];  // width, height, maxval
    int got = 0;
    std::string tok;
    while (got < 3 && is >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(is, rest);
            std::istringstream cs(tok + rest);
            std::string hash, label;
            if (cs >> hash && (hash == "#") && cs >> label && label == "range" && cs >> lo >> hi) {
                have_range = true;
            } else {
                // "#range" without space or an ordinary comment
                std::istringstream cs2(tok.substr(1) + rest);
                if (cs2 >> label && label == "range" && cs2 >> lo >> hi) have_range = true;
            }
            continue;
        }
        fields[got++] = std::stoi(tok);
    }
    if (got != 3) throw std::runtime_error("read_pgm16: truncated header in " + path);
    cols = fields[0];
    rows = fields[1];
    if (fields[2] != 65535) throw std::runtime_error("read_pgm16: expected 16-bit maxval");
    is.get();  // single whitespace byte after maxval

    Vector image(static_cast<std::size_t>(rows) * cols);
    for (double& v : image) {
        const int b0 = is.get();
        const int b1 = is.get();
        if (b1 < 0) throw std::runtime_error("read_pgm16: truncated pixels in " + path);
        const double t = (b0 * 256 + b1) / 65535.0;
        v = have_range ? lo + t * (hi - lo) : t;
    }
    return image;
}

void write_bimg(const std::string& path, const Vector& image, int rows, int cols) {
    check_dims(image, rows, cols);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_bimg: cannot open " + path);
    os.write("BIMG", 4);
    put_u32(os, static_cast<std::uint32_t>(rows));
    put_u32(os, static_cast<std::uint32_t>(cols));
    put_u32(os, 0);  // reserved, pads the header to 16 bytes
    for (double v : image) put_f64(os, v);
    if (!os) throw std::runtime_error("write_bimg: write failed for " + path);
}

Vector read_bimg(const std::string& path, int& rows, int& cols) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_bimg: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BIMG", 4) != 0) {
        throw std::runtime_error("read_bimg: bad magic in " + path);
    }
    rows = static_cast<int>(get_u32(is));
    cols = static_cast<int>(get_u32(is));
    get_u32(is);  // reserved
    if (rows < 1 || cols < 1) throw std::runtime_error("read_bimg: bad dimensions in " + path);
    Vector image(static_cast<std::size_t>(rows) * cols);
    for (double& v : image) v = get_f64(is);
    if (!is) throw std::runtime_error("read_bimg: truncated file " + path);
    return image;
}

}  // namespace bispect
