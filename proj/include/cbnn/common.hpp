#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace cbnn {

using VertexId = std::int32_t;
inline constexpr VertexId kNone = -1;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A tree invariant does not hold (corrupted or misused structure).
struct StructuralError : Error {
  using Error::Error;
};
// Unknown node / vertex / key.
struct LookupError : Error {
  using Error::Error;
};
// A value is outside its admissible range.
struct ValidationError : Error {
  using Error::Error;
};
// Trial protocol misuse (act/feedback ordering, horizon).
struct ProtocolError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
// An exponential-time oracle was asked to enumerate beyond its hard limit.
struct SizeError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Seedable stream of uniform draws. The [0,1) mapping is spelled out (top 53
// bits of an mt19937_64 word) so traces are reproducible across platforms;
// std::uniform_real_distribution is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
};

inline bool is_power_of_two(int k) { return k > 0 && (k & (k - 1)) == 0; }

}  // namespace cbnn
