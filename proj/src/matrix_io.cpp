#include "mmrec/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "mmrec/error.hpp"

namespace mmrec {

namespace {

template <typename U>
void put_le(std::vector<unsigned char>& buf, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) buf.push_back(static_cast<unsigned char>(value >> (8 * b)));
}

template <typename U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(p[b]) << (8 * b);
  return value;
}

}  // namespace

void write_matrix_file(const std::filesystem::path& path, const Matrix& m, MatrixPrecision precision) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max())
    throw InvalidArgument("matrix too large for the container format");
  const bool wide = precision == MatrixPrecision::f64;
  std::vector<unsigned char> buf;
  buf.reserve(12 + static_cast<std::size_t>(m.size()) * (wide ? 8 : 4));
  for (char c : std::string_view(wide ? "MMF8" : "MMF1")) buf.push_back(static_cast<unsigned char>(c));
  put_le(buf, static_cast<std::uint32_t>(m.rows()));
  put_le(buf, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (wide)
        put_le(buf, std::bit_cast<std::uint64_t>(m(r, c)));
      else
        put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
    }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix_file(const std::filesystem::path& path, MatrixPrecision* precision) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12) throw BadMagic("file too short for header: " + path.string());
  bool wide = false;
  if (std::memcmp(buf.data(), "MMF1", 4) == 0)
    wide = false;
  else if (std::memcmp(buf.data(), "MMF8", 4) == 0)
    wide = true;
  else
    throw BadMagic("bad magic in " + path.string());
  const auto rows = get_le<std::uint32_t>(buf.data() + 4);
  const auto cols = get_le<std::uint32_t>(buf.data() + 8);
  const std::size_t width = wide ? 8 : 4;
  const std::size_t expected = 12 + static_cast<std::size_t>(rows) * cols * width;
  if (buf.size() != expected) throw IoError("payload size mismatch in " + path.string());
  Matrix m(rows, cols);
  const unsigned char* p = buf.data() + 12;
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c, p += width)
      m(r, c) = wide ? std::bit_cast<double>(get_le<std::uint64_t>(p))
                     : static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
  if (precision) *precision = wide ? MatrixPrecision::f64 : MatrixPrecision::f32;
  return m;
}

}  // namespace mmrec
