#include "mmrec/rng.hpp"

#include <cmath>
#include <numbers>

#include "mmrec/error.hpp"

namespace mmrec {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::string_view domain,
                            std::uint64_t id) {
  const std::uint64_t tag = fnv1a64(domain);
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(tag),  static_cast<std::uint32_t>(tag >> 32),
      static_cast<std::uint32_t>(id),   static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed, std::string_view domain, std::uint64_t id)
    : engine_(make_engine(seed, domain, id)) {}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("uniform_index: bound must be positive");
  // Reject the low residue band so every value is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace mmrec
