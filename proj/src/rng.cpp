#include "uent/rng.hpp"

#include <cmath>

namespace uent {

std::uint64_t RngStream::splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

RngStream RngStream::substream(std::uint64_t idx) const {
  return RngStream(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ULL * (idx + 1))));
}

double RngStream::normal() {
  const double u1 = u01_pos();
  const double u2 = u01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t RngStream::index(std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(eng_()) * n) >> 64);
}

double RngStream::gamma(double alpha) {
  if (alpha < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^{1/a}
    const double g = gamma(alpha + 1.0);
    return g * std::pow(u01_pos(), 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = u01_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::beta(double a, double b) {
  const double g1 = gamma(a);
  const double g2 = gamma(b);
  return g1 / (g1 + g2);
}

}  // namespace uent
