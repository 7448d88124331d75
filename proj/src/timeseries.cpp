#include "uent/timeseries.hpp"

#include "uent/rng.hpp"

#include <cmath>
#include <fstream>

namespace uent {

namespace {

// Smallest root of q2 x^2 + q1 x + q0 inside [-3, 3]; the presets all have at
// least one (recorded choice for the two-root case).
double fixed_point(double q2, double q1, double q0) {
  const double disc = std::sqrt(q1 * q1 - 4.0 * q2 * q0);
  const double r1 = (-q1 - disc) / (2.0 * q2);
  const double r2 = (-q1 + disc) / (2.0 * q2);
  const double lo = std::min(r1, r2), hi = std::max(r1, r2);
  if (lo >= -3.0 && lo <= 3.0) return lo;
  if (hi >= -3.0 && hi <= 3.0) return hi;
  return 0.0;
}

}  // namespace

ArModel ar3() {
  ArModel m;
  m.p = 3;
  m.name = "ar3";
  m.update = [](const double* l) {
    return -1.35 + 0.5 * l[0] + 0.4 * l[1] * l[1] - 0.3 * l[2];
  };
  // noise-free balance: x = -1.35 + 0.5x + 0.4x^2 - 0.3x
  m.init_value = fixed_point(0.4, -0.8, -1.35);
  return m;
}

ArModel ar7() {
  ArModel m;
  m.p = 7;
  m.name = "ar7";
  m.update = [](const double* l) {
    return -1.35 + 0.5 * l[0] + 0.3 * l[4] * l[4] - 0.3 * l[6];
  };
  m.init_value = fixed_point(0.3, -0.8, -1.35);
  return m;
}

ArModel ar15() {
  ArModel m;
  m.p = 15;
  m.name = "ar15";
  m.update = [](const double* l) {
    const double s1 = l[4] + l[5] + l[6];
    const double s2 = l[10] + l[11] + l[12];
    return -1.35 + 0.5 * l[0] + 0.05 * s1 * s1 - 0.005 * s2 * s2 - 0.1 * l[14];
  };
  m.init_value = fixed_point(0.405, -0.6, -1.35);
  return m;
}

Trajectory simulate_ar(const ArModel& model, long T, long burn_in,
                       std::uint64_t seed) {
  if (!model.update) throw ConfigError("simulate_ar: missing update rule");
  if (model.p < 1 || !(model.noise_sigma > 0.0))
    throw ConfigError("simulate_ar: bad model");
  if (T < model.p + 2) throw ConfigError("simulate_ar: T >= p+2 required");
  if (burn_in < 0) throw ConfigError("simulate_ar: burn_in >= 0 required");

  RngStream rng(seed);
  const int p = model.p;
  // lags[0] = x_{t-1}, ..., lags[p-1] = x_{t-p}
  std::vector<double> lags(p);
  for (int i = 0; i < p; ++i)
    lags[p - 1 - i] = model.init_value + model.noise_sigma * rng.normal();

  Trajectory traj;
  traj.model = model.name;
  traj.seed = seed;
  traj.values.reserve(T);
  for (long t = 0; t < burn_in + T; ++t) {
    const double x = model.update(lags.data()) + model.noise_sigma * rng.normal();
    if (!(std::fabs(x) <= 1e6)) throw Diverged("simulate_ar: trajectory exploded");
    for (int i = p - 1; i > 0; --i) lags[i] = lags[i - 1];
    lags[0] = x;
    if (t >= burn_in) traj.values.push_back(x);
  }
  return traj;
}

SampleSet delay_embed(const Trajectory& traj, int m, int stride) {
  const long T = static_cast<long>(traj.values.size());
  if (m < 1 || m > T) throw ConfigError("delay_embed: need 1 <= m <= T");
  if (stride < 1) throw ConfigError("delay_embed: stride >= 1 required");
  const long rows = (T - m) / stride + 1;
  Matrix out(rows, m);
  for (long r = 0; r < rows; ++r) {
    const long start = r * stride;
    for (int j = 0; j < m; ++j) out(r, j) = traj.values[start + m - 1 - j];
  }
  return SampleSet(std::move(out));
}

RateReport entropy_rate_parts(const Trajectory& traj, int p,
                              const RateEstimator& est) {
  const long T = static_cast<long>(traj.values.size());
  if (p < 1 || T <= p + 1) throw ConfigError("entropy_rate: need T > p+1");
  const SampleSet high = delay_embed(traj, p + 1);
  const SampleSet low = delay_embed(traj, p);

  RateReport r;
  if (const auto* cfg = std::get_if<EstimatorConfig>(&est)) {
    r.high = estimate(high, *cfg);
    r.low = estimate(low, *cfg);
  } else {
    const UmConfig& um = std::get<UmConfig>(est);
    UmConfig um_low = um;
    um_low.seed = RngStream(um.seed).substream(0xA1).seed();
    r.high = um_estimate(high, um);
    r.low = um_estimate(low, um_low);
  }
  r.rate = r.high.value - r.low.value;
  return r;
}

EstimateReport entropy_rate(const Trajectory& traj, int p,
                            const RateEstimator& est) {
  const RateReport parts = entropy_rate_parts(traj, p, est);
  EstimateReport rep = parts.high;
  rep.value = parts.rate;
  rep.estimator += "-rate";
  rep.wall_time = parts.high.wall_time + parts.low.wall_time;
  rep.base_value.reset();
  rep.correction.reset();
  rep.std_err.reset();
  return rep;
}

double true_gaussian_rate(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("true_gaussian_rate: sigma > 0 required");
  return 0.5 * std::log(2.0 * M_PI * M_E * sigma * sigma);
}

void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out << "x\n";
  for (const double v : traj.values) out << format_double(v) << "\n";
}

Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty trajectory csv: " + path);
  Trajectory traj;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    traj.values.push_back(std::stod(line));
  }
  if (traj.values.empty()) throw ConfigError("trajectory csv has no rows: " + path);
  return traj;
}

}  // namespace uent
