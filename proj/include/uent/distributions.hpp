#pragma once

#include "uent/common.hpp"
#include "uent/rng.hpp"

#include <variant>

namespace uent {

struct StdNormal {
  long d = 1;
};

// Product of symmetric Beta(b, b) marginals on [0,1]^d.
struct SymBeta {
  long d = 1;
  double b = 1.0;
};

// x1 ~ N(mu, 1/(2a)); within each of n2 blocks, x_{j,i} ~ N(x_{j,i-1}^2, 1/(2b))
// for i = 2..n1, with x_{j,1} = x1. Dimension (n1-1)*n2 + 1.
struct HybridRosenbrock {
  long n1 = 4, n2 = 1;
  double a = 1.0, b = 0.1, mu = 1.0;
  long dim() const { return (n1 - 1) * n2 + 1; }
};

// Pairs: x_{2i-1} ~ N(mu_odd, 1/2), x_{2i} ~ N(x_{2i-1}^2, 1/(2c)). d even.
struct EvenRosenbrock {
  long d = 2;
  double mu_odd = 0.0, c = 12.5;
};

// Uniform counterparts with matching half-widths.
struct HybridRosenbrockUniform {
  long n1 = 4, n2 = 1;
  double a = 1.0, b = 0.1, mu = 1.0;
  long dim() const { return (n1 - 1) * n2 + 1; }
};

struct EvenRosenbrockUniform {
  long d = 2;
  double mu_odd = 0.0, c = 0.025;
};

using DistributionSpec =
    std::variant<StdNormal, SymBeta, HybridRosenbrock, EvenRosenbrock,
                 HybridRosenbrockUniform, EvenRosenbrockUniform>;

void validate(const DistributionSpec& spec);  // throws ConfigError
long dimension(const DistributionSpec& spec);
std::string family_name(const DistributionSpec& spec);

// i.i.d. draws; row i consumes substream i of the seed, so chunked parallel
// generation and sequential generation produce identical output.
SampleSet sample(const DistributionSpec& spec, long n, std::uint64_t seed);

double analytic_entropy(const DistributionSpec& spec);  // nats

// Exact log density (|-inf| outside a uniform variant's support); used by the
// Monte Carlo entropy cross-checks.
double log_density(const DistributionSpec& spec, const double* x);

}  // namespace uent
