#ifndef HTMETA_RNG_HPP
#define HTMETA_RNG_HPP

#include <cmath>
#include <cstdint>

namespace htmeta {

inline std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with splittable seeding: stream r of a batch is Rng(seed, r).
// Self-contained so that sample streams are identical across platforms and
// standard-library versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
    for (auto &w : s_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1]; maps the raw draw so that the upper endpoint is reachable,
  // which keeps inverse-CDF transforms like V^{-1/a} finite.
  double uniform_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller on (0,1] uniforms
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // Pareto type I with survival P(W > x) = x^{-alpha} on [1, inf)
  double pareto1(double alpha) { return std::pow(uniform_pos(), -1.0 / alpha); }

  // Lomax (Pareto type II) with survival P(W > x) = (1 + x)^{-alpha}
  double lomax(double alpha) { return std::pow(uniform_pos(), -1.0 / alpha) - 1.0; }

  bool coin() { return (next() & 1ULL) != 0; }

  std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace htmeta

#endif
