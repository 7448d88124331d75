#include "uent/distributions.hpp"

#include "uent/parallel.hpp"
#include "uent/special.hpp"

#include <cmath>
#include <limits>

namespace uent {

namespace {

constexpr double kLogPi = 1.1447298858494001741434273513531;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double half_log_pi_e_over(double s) {  // 0.5 log(pi e / s)
  return 0.5 * (kLogPi + 1.0 - std::log(s));
}

struct Validator {
  void operator()(const StdNormal& p) const {
    if (p.d < 1) throw ConfigError("StdNormal: d >= 1 required");
  }
  void operator()(const SymBeta& p) const {
    if (p.d < 1 || !(p.b > 0.0)) throw ConfigError("SymBeta: d >= 1, b > 0 required");
  }
  void operator()(const HybridRosenbrock& p) const {
    if (p.n1 < 2 || p.n2 < 1 || !(p.a > 0.0) || !(p.b > 0.0))
      throw ConfigError("HybridRosenbrock: n1 >= 2, n2 >= 1, a, b > 0 required");
  }
  void operator()(const EvenRosenbrock& p) const {
    if (p.d < 2 || p.d % 2 != 0 || !(p.c > 0.0))
      throw ConfigError("EvenRosenbrock: even d >= 2, c > 0 required");
  }
  void operator()(const HybridRosenbrockUniform& p) const {
    if (p.n1 < 2 || p.n2 < 1 || !(p.a > 0.0) || !(p.b > 0.0))
      throw ConfigError("HybridRosenbrockUniform: n1 >= 2, n2 >= 1, a, b > 0 required");
  }
  void operator()(const EvenRosenbrockUniform& p) const {
    if (p.d < 2 || p.d % 2 != 0 || !(p.c > 0.0))
      throw ConfigError("EvenRosenbrockUniform: even d >= 2, c > 0 required");
  }
};

}  // namespace

void validate(const DistributionSpec& spec) { std::visit(Validator{}, spec); }

long dimension(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& p) -> long {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StdNormal> || std::is_same_v<T, SymBeta> ||
                      std::is_same_v<T, EvenRosenbrock> ||
                      std::is_same_v<T, EvenRosenbrockUniform>)
          return p.d;
        else
          return p.dim();
      },
      spec);
}

std::string family_name(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StdNormal>) return "std_normal";
        else if constexpr (std::is_same_v<T, SymBeta>) return "sym_beta";
        else if constexpr (std::is_same_v<T, HybridRosenbrock>) return "hybrid_rosenbrock";
        else if constexpr (std::is_same_v<T, EvenRosenbrock>) return "even_rosenbrock";
        else if constexpr (std::is_same_v<T, HybridRosenbrockUniform>)
          return "hybrid_rosenbrock_uniform";
        else
          return "even_rosenbrock_uniform";
      },
      spec);
}

namespace {

// Row layout for the hybrid family: x1, then block 1 positions 2..n1, block 2,
// and so on.
template <typename DrawChain>
void fill_hybrid_row(double* row, long n1, long n2, double x1, DrawChain&& next) {
  row[0] = x1;
  long pos = 1;
  for (long j = 0; j < n2; ++j) {
    double prev = x1;
    for (long i = 2; i <= n1; ++i) {
      prev = next(prev);
      row[pos++] = prev;
    }
  }
}

struct RowSampler {
  RngStream rng;
  double* row;
  long d;

  void operator()(const StdNormal&) {
    for (long j = 0; j < d; ++j) row[j] = rng.normal();
  }
  void operator()(const SymBeta& p) {
    for (long j = 0; j < d; ++j) row[j] = rng.beta(p.b, p.b);
  }
  void operator()(const HybridRosenbrock& p) {
    const double sd_a = std::sqrt(0.5 / p.a);
    const double sd_b = std::sqrt(0.5 / p.b);
    const double x1 = p.mu + sd_a * rng.normal();
    fill_hybrid_row(row, p.n1, p.n2, x1,
                    [&](double prev) { return prev * prev + sd_b * rng.normal(); });
  }
  void operator()(const EvenRosenbrock& p) {
    const double sd_odd = std::sqrt(0.5);
    const double sd_even = std::sqrt(0.5 / p.c);
    for (long i = 0; i < d; i += 2) {
      row[i] = p.mu_odd + sd_odd * rng.normal();
      row[i + 1] = row[i] * row[i] + sd_even * rng.normal();
    }
  }
  void operator()(const HybridRosenbrockUniform& p) {
    const double w_a = std::sqrt(1.0 / (8.0 * p.a));
    const double w_b = std::sqrt(1.0 / (8.0 * p.b));
    const double x1 = p.mu + rng.uniform(-w_a, w_a);
    fill_hybrid_row(row, p.n1, p.n2, x1,
                    [&](double prev) { return prev * prev + rng.uniform(-w_b, w_b); });
  }
  void operator()(const EvenRosenbrockUniform& p) {
    for (long i = 0; i < d; i += 2) {
      row[i] = p.mu_odd + rng.uniform(-0.5, 0.5);
      row[i + 1] = row[i] * row[i] + rng.uniform(-p.c, p.c);
    }
  }
};

}  // namespace

SampleSet sample(const DistributionSpec& spec, long n, std::uint64_t seed) {
  validate(spec);
  if (n < 1) throw ConfigError("sample: n >= 1 required");
  const long d = dimension(spec);
  Matrix m(n, d);
  const RngStream root(seed);
  parallel_for(0, n, [&](long i) {
    RowSampler rs{root.substream(static_cast<std::uint64_t>(i)), m.row(i).data(), d};
    std::visit(rs, spec);
  });
  return SampleSet(std::move(m));
}

double analytic_entropy(const DistributionSpec& spec) {
  validate(spec);
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StdNormal>) {
          return 0.5 * p.d * (kLog2Pi + 1.0);
        } else if constexpr (std::is_same_v<T, SymBeta>) {
          const double log_beta =
              2.0 * std::lgamma(p.b) - std::lgamma(2.0 * p.b);
          return p.d * (log_beta -
                        2.0 * (p.b - 1.0) * (digamma(p.b) - digamma(2.0 * p.b)));
        } else if constexpr (std::is_same_v<T, HybridRosenbrock>) {
          return half_log_pi_e_over(p.a) +
                 static_cast<double>((p.n1 - 1) * p.n2) * half_log_pi_e_over(p.b);
        } else if constexpr (std::is_same_v<T, EvenRosenbrock>) {
          return (p.d / 2) * (half_log_pi_e_over(1.0) + half_log_pi_e_over(p.c));
        } else if constexpr (std::is_same_v<T, HybridRosenbrockUniform>) {
          const double w_a = std::sqrt(1.0 / (8.0 * p.a));
          const double w_b = std::sqrt(1.0 / (8.0 * p.b));
          return std::log(2.0 * w_a) +
                 static_cast<double>((p.n1 - 1) * p.n2) * std::log(2.0 * w_b);
        } else {
          // odd coordinates are width-1 uniforms (entropy 0)
          return (p.d / 2) * std::log(2.0 * p.c);
        }
      },
      spec);
}

namespace {

double sq(double x) { return x * x; }

struct LogDensity {
  const double* x;
  long d;

  double operator()(const StdNormal&) const {
    double s = -0.5 * d * kLog2Pi;
    for (long j = 0; j < d; ++j) s -= 0.5 * sq(x[j]);
    return s;
  }
  double operator()(const SymBeta& p) const {
    const double log_beta = 2.0 * std::lgamma(p.b) - std::lgamma(2.0 * p.b);
    double s = 0.0;
    for (long j = 0; j < d; ++j) {
      if (x[j] <= 0.0 || x[j] >= 1.0)
        return -std::numeric_limits<double>::infinity();
      s += (p.b - 1.0) * (std::log(x[j]) + std::log1p(-x[j])) - log_beta;
    }
    return s;
  }
  double operator()(const HybridRosenbrock& p) const {
    double s = 0.5 * std::log(p.a / M_PI) - p.a * sq(x[0] - p.mu);
    long pos = 1;
    for (long j = 0; j < p.n2; ++j) {
      double prev = x[0];
      for (long i = 2; i <= p.n1; ++i) {
        s += 0.5 * std::log(p.b / M_PI) - p.b * sq(x[pos] - prev * prev);
        prev = x[pos++];
      }
    }
    return s;
  }
  double operator()(const EvenRosenbrock& p) const {
    double s = 0.0;
    for (long i = 0; i < d; i += 2) {
      s += -0.5 * kLogPi - sq(x[i] - p.mu_odd);
      s += 0.5 * std::log(p.c / M_PI) - p.c * sq(x[i + 1] - x[i] * x[i]);
    }
    return s;
  }
  double operator()(const HybridRosenbrockUniform& p) const {
    const double w_a = std::sqrt(1.0 / (8.0 * p.a));
    const double w_b = std::sqrt(1.0 / (8.0 * p.b));
    if (std::fabs(x[0] - p.mu) > w_a)
      return -std::numeric_limits<double>::infinity();
    double s = -std::log(2.0 * w_a);
    long pos = 1;
    for (long j = 0; j < p.n2; ++j) {
      double prev = x[0];
      for (long i = 2; i <= p.n1; ++i) {
        if (std::fabs(x[pos] - prev * prev) > w_b)
          return -std::numeric_limits<double>::infinity();
        s -= std::log(2.0 * w_b);
        prev = x[pos++];
      }
    }
    return s;
  }
  double operator()(const EvenRosenbrockUniform& p) const {
    double s = 0.0;
    for (long i = 0; i < d; i += 2) {
      if (std::fabs(x[i] - p.mu_odd) > 0.5 ||
          std::fabs(x[i + 1] - x[i] * x[i]) > p.c)
        return -std::numeric_limits<double>::infinity();
      s -= std::log(2.0 * p.c);
    }
    return s;
  }
};

}  // namespace

double log_density(const DistributionSpec& spec, const double* x) {
  return std::visit(LogDensity{x, dimension(spec)}, spec);
}

}  // namespace uent
