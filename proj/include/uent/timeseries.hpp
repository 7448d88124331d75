#pragma once

#include "uent/common.hpp"
#include "uent/estimators.hpp"
#include "uent/uniformize.hpp"

#include <functional>
#include <variant>

namespace uent {

// Nonlinear autoregression x_t = update(lags) + noise, lags[0] = x_{t-1}.
struct ArModel {
  int p = 3;
  std::function<double(const double*)> update;
  double noise_sigma = 0.03;
  std::string name = "custom";
  // Noise-free fixed point used to seed the recursion (presets), else 0.
  double init_value = 0.0;
};

ArModel ar3();
ArModel ar7();
ArModel ar15();

struct Trajectory {
  std::vector<double> values;
  std::string model = "custom";
  std::uint64_t seed = 0;
};

// First p values are init_value plus N(0, noise_sigma^2) jitter; burn_in steps
// are discarded. Throws Diverged when |x_t| exceeds 1e6.
Trajectory simulate_ar(const ArModel& model, long T, long burn_in,
                       std::uint64_t seed);

// Row r is (x_{r+m-1}, ..., x_r): newest coordinate first. stride thins the
// row starts; rows overlap whenever stride < m.
SampleSet delay_embed(const Trajectory& traj, int m, int stride = 1);

using RateEstimator = std::variant<EstimatorConfig, UmConfig>;

struct RateReport {
  EstimateReport high;  // blocks of length p+1
  EstimateReport low;   // blocks of length p
  double rate = 0.0;    // high.value - low.value
};

// Block-entropy difference H(blocks_{p+1}) - H(blocks_p). With a UM estimator
// the two flows train on independent seed substreams.
RateReport entropy_rate_parts(const Trajectory& traj, int p,
                              const RateEstimator& est);
EstimateReport entropy_rate(const Trajectory& traj, int p,
                            const RateEstimator& est);

// Entropy rate of a process whose conditional law is Gaussian with fixed
// sigma: 0.5 log(2 pi e sigma^2).
double true_gaussian_rate(double sigma);

void save_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory load_trajectory_csv(const std::string& path);

}  // namespace uent
