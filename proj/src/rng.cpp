#include "invopt/rng.hpp"

#include <cmath>

namespace invopt {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = b ^ 0x632BE59BD9B4E019ull;
  return h ^ rotl(splitmix64(s), 17);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::uint64_t sm = mix(seed, stream);
  for (auto& w : s_) w = splitmix64(sm);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

Rng::result_type Rng::operator()() {
  const std::uint64_t out = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return out;
}

double Rng::uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::index(std::uint64_t n) {
  // Lemire's multiply-shift with rejection
  std::uint64_t x = (*this)();
  __uint128_t m = __uint128_t(x) * n;
  std::uint64_t low = std::uint64_t(m);
  if (low < n) {
    const std::uint64_t floor = -n % n;
    while (low < floor) {
      x = (*this)();
      m = __uint128_t(x) * n;
      low = std::uint64_t(m);
    }
  }
  return std::uint64_t(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Rng Rng::substream(std::uint64_t id) const { return Rng(seed_, mix(stream_ + 1, id)); }

}  // namespace invopt
