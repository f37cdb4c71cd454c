#include "mmrec/types.hpp"

#include <algorithm>

namespace mmrec {

Csr Csr::from_pairs(std::size_t rows, std::size_t columns,
                    std::vector<std::pair<Index, Index>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  Csr out(rows, columns);
  out.cols.reserve(pairs.size());
  for (const auto& [r, c] : pairs) {
    ++out.offsets[r + 1];
    out.cols.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) out.offsets[r + 1] += out.offsets[r];
  return out;
}

bool Csr::contains(std::size_t r, Index c) const {
  const auto items = row(r);
  return std::binary_search(items.begin(), items.end(), c);
}

Csr Csr::transposed() const {
  std::vector<std::pair<Index, Index>> flipped;
  flipped.reserve(nnz());
  for (std::size_t r = 0; r < n_rows; ++r)
    for (Index c : row(r)) flipped.emplace_back(c, static_cast<Index>(r));
  return from_pairs(n_cols, n_rows, std::move(flipped));
}

std::vector<std::pair<Index, Index>> Csr::pairs() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < n_rows; ++r)
    for (Index c : row(r)) out.emplace_back(static_cast<Index>(r), c);
  return out;
}

}  // namespace mmrec
