#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmrec {

// Small text helpers shared by the TSV and config readers.

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string_view> split_view(std::string_view text, char sep);
std::string_view trim(std::string_view text);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int64(std::string_view text);
std::optional<std::uint64_t> parse_uint64(std::string_view text);

/// Fixed-point rendering, e.g. format_fixed(0.5, 6) == "0.500000".
std::string format_fixed(double value, int decimals);

}  // namespace mmrec
