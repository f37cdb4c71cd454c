#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mmrec {

using Index = std::uint32_t;

/// Dense row-major double matrix; all training math runs in double.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Compressed sparse rows of a boolean user x item adjacency.
/// Column indices inside each row are strictly increasing.
struct Csr {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<Index> cols;

  Csr() = default;
  Csr(std::size_t rows, std::size_t columns)
      : n_rows(rows), n_cols(columns), offsets(rows + 1, 0) {}

  /// Builds from arbitrary (row, col) pairs; duplicates collapse.
  static Csr from_pairs(std::size_t rows, std::size_t columns,
                        std::vector<std::pair<Index, Index>> pairs);

  std::span<const Index> row(std::size_t r) const {
    return {cols.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  std::size_t row_size(std::size_t r) const { return offsets[r + 1] - offsets[r]; }
  std::size_t nnz() const { return cols.size(); }
  bool contains(std::size_t r, Index c) const;

  /// Column-major view of the same pattern (items x users).
  Csr transposed() const;

  std::vector<std::pair<Index, Index>> pairs() const;

  friend bool operator==(const Csr&, const Csr&) = default;
};

}  // namespace mmrec
