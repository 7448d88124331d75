#include "uent/estimators.hpp"

#include "uent/special.hpp"

#include <chrono>
#include <cmath>

namespace uent {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// value = constant + mean(contrib); fixed index-order reduction.
EstimateReport reduce_report(const Vector& contrib, double constant,
                             const std::string& name, int k, long d,
                             const std::string& norm) {
  const long n = contrib.size();
  double sum = 0.0;
  for (long i = 0; i < n; ++i) sum += contrib[i];
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (long i = 0; i < n; ++i) {
    const double c = contrib[i] - mean;
    ss += c * c;
  }
  EstimateReport r;
  r.value = constant + mean;
  r.estimator = name;
  r.k = k;
  r.norm = norm;
  r.n_used = n;
  r.d = d;
  if (n > 1) r.std_err = std::sqrt(ss / (n - 1.0) / n);
  if (!std::isfinite(r.value)) throw NonFinite(name + ": non-finite estimate");
  return r;
}

std::string norm_name(Norm p) {
  switch (p) {
    case Norm::L1: return "1";
    case Norm::L2: return "2";
    case Norm::Linf: return "inf";
  }
  return "?";
}

}  // namespace

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::KL: return "KL";
    case EstimatorKind::KSG: return "KSG";
    case EstimatorKind::tKL: return "tKL";
    case EstimatorKind::tKSG: return "tKSG";
  }
  return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "KL") return EstimatorKind::KL;
  if (name == "KSG") return EstimatorKind::KSG;
  if (name == "tKL") return EstimatorKind::tKL;
  if (name == "tKSG") return EstimatorKind::tKSG;
  throw ConfigError("unknown estimator: " + name);
}

EstimateReport kl_estimate(const SampleSet& s, const EstimatorConfig& cfg) {
  const auto t0 = Clock::now();
  const long n = s.n(), d = s.dim();
  const Vector eps = knn_radii(s, cfg.k, cfg.p, cfg.backend);
  Vector contrib(n);
  for (long i = 0; i < n; ++i) contrib[i] = d * std::log(eps[i]);
  const double constant = -digamma(cfg.k) + digamma(static_cast<double>(n)) +
                          log_unit_ball_volume(static_cast<int>(d), cfg.p);
  auto r = reduce_report(contrib, constant, "KL", cfg.k, d, norm_name(cfg.p));
  r.wall_time = seconds_since(t0);
  return r;
}

EstimateReport ksg_estimate(const SampleSet& s, int k, KnnBackend backend) {
  const auto t0 = Clock::now();
  const long n = s.n(), d = s.dim();
  const Matrix em = marginal_radii(s, k, backend);
  Vector contrib(n);
  for (long i = 0; i < n; ++i) {
    double sum = 0.0;
    for (long j = 0; j < d; ++j) sum += std::log(em(i, j));
    contrib[i] = sum;
  }
  const double constant = -digamma(k) + digamma(static_cast<double>(n)) +
                          static_cast<double>(d - 1) / k;
  auto r = reduce_report(contrib, constant, "KSG", k, d, "inf");
  r.wall_time = seconds_since(t0);
  return r;
}

std::pair<Vector, double> t_contributions(const SampleSet& s, EstimatorKind kind,
                                          int k, KnnBackend backend) {
  if (kind != EstimatorKind::tKL && kind != EstimatorKind::tKSG)
    throw ConfigError("t_contributions: only tKL/tKSG have truncated cells");
  const long n = s.n(), d = s.dim();
  const CellGeometry g = cell_geometry(s, k, backend);
  const Matrix& sides = kind == EstimatorKind::tKL ? g.xi : g.zeta;
  Vector contrib(n);
  for (long i = 0; i < n; ++i) {
    double sum = 0.0;
    for (long j = 0; j < d; ++j) sum += std::log(sides(i, j));
    contrib[i] = sum;
  }
  double constant = -digamma(k) + digamma(static_cast<double>(n));
  if (kind == EstimatorKind::tKSG) constant += static_cast<double>(d - 1) / k;
  return {std::move(contrib), constant};
}

EstimateReport tkl_estimate(const SampleSet& s, int k, KnnBackend backend) {
  const auto t0 = Clock::now();
  const auto [contrib, constant] = t_contributions(s, EstimatorKind::tKL, k, backend);
  auto r = reduce_report(contrib, constant, "tKL", k, s.dim(), "inf");
  r.wall_time = seconds_since(t0);
  return r;
}

EstimateReport tksg_estimate(const SampleSet& s, int k, KnnBackend backend) {
  const auto t0 = Clock::now();
  const auto [contrib, constant] = t_contributions(s, EstimatorKind::tKSG, k, backend);
  auto r = reduce_report(contrib, constant, "tKSG", k, s.dim(), "inf");
  r.wall_time = seconds_since(t0);
  return r;
}

EstimateReport estimate(const SampleSet& s, const EstimatorConfig& cfg) {
  switch (cfg.kind) {
    case EstimatorKind::KL: return kl_estimate(s, cfg);
    case EstimatorKind::KSG: return ksg_estimate(s, cfg.k, cfg.backend);
    case EstimatorKind::tKL: return tkl_estimate(s, cfg.k, cfg.backend);
    case EstimatorKind::tKSG: return tksg_estimate(s, cfg.k, cfg.backend);
  }
  throw ConfigError("estimate: bad estimator kind");
}

RescaleResult minmax_rescale(const SampleSet& s) {
  const long n = s.n(), d = s.dim();
  Vector lo(d), hi(d);
  for (long j = 0; j < d; ++j) {
    lo[j] = s.data().col(j).minCoeff();
    hi[j] = s.data().col(j).maxCoeff();
    if (!(hi[j] > lo[j]))
      throw DomainError("minmax_rescale: zero extent in dimension " +
                        std::to_string(j + 1));
  }
  Matrix m(n, d);
  double log_volume = 0.0;
  for (long j = 0; j < d; ++j) {
    const double w = hi[j] - lo[j];
    log_volume += std::log(w);
    for (long i = 0; i < n; ++i) m(i, j) = (s.data()(i, j) - lo[j]) / w;
  }
  return {SampleSet(std::move(m)), log_volume, std::move(lo), std::move(hi)};
}

}  // namespace uent
