#pragma once

#include <string>

#include "bispect/vec.hpp"

namespace bispect {

/// 16-bit binary PGM (P5). Values are scaled linearly from [min, max] to
/// [0, 65535]; the original range rides along in a comment so the image can be
/// de-quantized on read. Constant images map to 0.
void write_pgm16(const std::string& path, const Vector& image, int rows, int cols);

/// Reads a 16-bit P5 file written by write_pgm16, undoing the scaling when the
/// range comment is present (plain files come back in [0, 1]).
Vector read_pgm16(const std::string& path, int& rows, int& cols);

/// Raw float64 grid dump: "BIMG", u32 rows, u32 cols, u32 reserved, then
/// row-major little-endian doubles. Round-trips exactly.
void write_bimg(const std::string& path, const Vector& image, int rows, int cols);
Vector read_bimg(const std::string& path, int& rows, int& cols);

}  // namespace bispect
