#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace uent {

// Deterministic stream of variates on top of mt19937_64. All transforms are
// hand-rolled (53-bit uniforms, Box-Muller pairs) because the std::*_distribution
// classes are implementation-defined and would break bitwise reproducibility
// of seeded runs across standard libraries.
//
// Substreams: substream(i) reseeds with splitmix64(seed ^ GOLDEN*(i+1)), so
// parallel chunks can draw independently while staying a pure function of
// (seed, i).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  static std::uint64_t splitmix64(std::uint64_t x);

  RngStream substream(std::uint64_t idx) const;

  std::uint64_t raw() { return eng_(); }

  // [0, 1), 53-bit resolution
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  // (0, 1], safe under log()
  double u01_pos() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // Box-Muller; consumes exactly two engine draws per call (no cached spare).
  double normal();
  double normal(double mu, double sd) { return mu + sd * normal(); }

  // Unbiased enough for shuffles (multiply-shift, bias < 2^-53 relative).
  std::uint64_t index(std::uint64_t n);

  // Marsaglia-Tsang for alpha >= 1; boosted by u^{1/alpha} below 1.
  double gamma(double alpha);
  // Two-Gamma ratio construction.
  double beta(double a, double b);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace uent
