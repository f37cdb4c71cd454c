#pragma once

#include <filesystem>

#include "mmrec/types.hpp"

namespace mmrec {

/// Binary dense-matrix container.
///   bytes 0-3   magic "MMF1" (float32 payload) or "MMF8" (float64 payload)
///   bytes 4-7   rows, uint32 little-endian
///   bytes 8-11  cols, uint32 little-endian
///   then rows*cols IEEE-754 values, little-endian, row-major.
enum class MatrixPrecision { f32, f64 };

void write_matrix_file(const std::filesystem::path& path, const Matrix& m, MatrixPrecision precision);

/// Accepts either magic. Throws BadMagic, IoError on truncation.
Matrix read_matrix_file(const std::filesystem::path& path, MatrixPrecision* precision = nullptr);

}  // namespace mmrec
