#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace mmrec {

/// Deterministic random stream used for every stochastic choice in the
/// framework.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. A stream is identified by (seed, domain, id): the three values
/// are fed through std::seed_seq (also fully specified by the standard), so
/// independent streams can be derived without sharing state. Bounded integers
/// and normals are drawn with the routines below rather than the
/// implementation-defined std distributions, which keeps sequences identical
/// across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view domain, std::uint64_t id = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (both halves are used).
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// FNV-1a, used to turn stream domain names into seed material.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace mmrec
