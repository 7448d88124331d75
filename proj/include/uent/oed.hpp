#pragma once

#include "uent/common.hpp"
#include "uent/rng.hpp"

#include <functional>

namespace uent {

// Predator-prey observation problem: dx/dt = a x - x y, dy/dt = b x y - y,
// with (a, b) drawn from a uniform prior box and noisy (x, y) readings.
struct LvConfig {
  double a_lo = 0.5, a_hi = 4.0;
  double b_lo = 0.5, b_hi = 4.0;
  double x0 = 1.0, y0 = 0.5;
  double noise_variance = 0.01;  // variance per reading (sd 0.1)
  double t_end = 10.0;
  double dt = 1e-3;
};

struct DesignSchedule {
  double alpha = 1.0, beta = 1.0;
  std::vector<double> times;  // strictly increasing, inside (0, t_end)
};

struct NmcConfig {
  long m_outer = 2000;
  long n_inner = 2000;
  std::uint64_t seed = 0;
};

// Fixed-step classical Runge-Kutta with cubic-Hermite dense output at the
// query times; relative error <= 1e-6 at dt = 1e-3.
std::pair<Vector, Vector> lv_integrate(double a, double b, const LvConfig& lv,
                                       const std::vector<double>& query_times);

// t_i = T * BetaQuantile(i/(d+1); alpha, beta), i = 1..d.
DesignSchedule beta_schedule(double alpha, double beta, int d, double t_end);

/// One row per prior draw: (x(t1), y(t1), ..., x(td), y(td)) plus independent
// Gaussian noise per reading. Row i uses seed substream i.
SampleSet sample_design_data(const DesignSchedule& schedule, const LvConfig& lv,
                             long n, std::uint64_t seed);

struct UtilityRow {
  double alpha = 0.0, beta = 0.0;
  double utility = 0.0;
  double std_err = 0.0;
};

struct MesResult {
  DesignSchedule best;
  std::vector<UtilityRow> table;  // one row per grid point, input order
};

using DesignEstimator = std::function<double(const SampleSet&, double* std_err)>;

// Grid search for the maximum-entropy-sampling design. Every grid point reuses
// the same data seed (common random numbers); ties go to the smaller
// (alpha, beta) pair.
MesResult mes_search(const std::vector<std::pair<double, double>>& grid,
                     const LvConfig& lv, long n, const DesignEstimator& estimator,
                     std::uint64_t seed, int schedule_d = 5);

// Default 8x8 logarithmic grid over [0.3, 5]^2.
std::vector<std::pair<double, double>> default_design_grid();

// Generic simulator with Gaussian observation noise; covers the predator-prey
// problem, point-mass priors, and the scalar conjugate check model.
struct GaussianSimModel {
  std::function<Vector(RngStream&)> sample_prior;
  std::function<Vector(const Vector&)> forward;  // noiseless response
  double noise_sd = 0.1;
  long response_dim = 0;
};

GaussianSimModel lv_model(const DesignSchedule& schedule, const LvConfig& lv);
GaussianSimModel point_mass_model(const DesignSchedule& schedule, const LvConfig& lv,
                                  double a0, double b0);
// theta ~ N(0,1), y = theta + eps with unit noise; H(Y) = 0.5 log(4 pi e).
GaussianSimModel conjugate_toy_model();

// Double-loop marginal entropy estimate with one shared inner sample set and
// log-sum-exp stabilization. Deterministic given cfg.seed.
double nmc_entropy(const GaussianSimModel& model, const NmcConfig& cfg);
double nmc_entropy(const DesignSchedule& schedule, const LvConfig& lv,
                   const NmcConfig& cfg);

void save_utility_csv(const std::string& path, const std::vector<UtilityRow>& table);
void save_schedule_json(const std::string& path, const DesignSchedule& schedule);

}  // namespace uent
