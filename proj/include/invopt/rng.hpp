#pragma once

// xoshiro256** seeded through splitmix64. Every draw used by the library goes
// through the helpers below so results do not depend on the standard
// library's distribution implementations.

#include <cstdint>
#include <limits>

namespace invopt {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  /// Stream `stream` of seed `seed`; distinct streams are statistically independent.
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on {0, ..., n-1}, unbiased. n must be positive.
  std::uint64_t index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Child generator keyed by (this stream, id).
  Rng substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_, stream_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace invopt
