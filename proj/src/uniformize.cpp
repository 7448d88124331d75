#include "uent/uniformize.hpp"

#include "uent/special.hpp"

#include <chrono>
#include <cmath>

namespace uent {

namespace {

using Clock = std::chrono::steady_clock;

void check_base(const UmConfig& cfg) {
  if (cfg.base_estimator != EstimatorKind::tKL &&
      cfg.base_estimator != EstimatorKind::tKSG)
    throw ConfigError("um: base estimator must be tKL or tKSG");
  if (cfg.k < 1) throw InvalidK("um: k must be >= 1");
}

double index_order_mean(const Vector& v) {
  double s = 0.0;
  for (long i = 0; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(v.size());
}

double std_error(const Vector& v) {
  const long n = v.size();
  if (n < 2) return 0.0;
  const double mean = index_order_mean(v);
  double ss = 0.0;
  for (long i = 0; i < n; ++i) {
    const double c = v[i] - mean;
    ss += c * c;
  }
  return std::sqrt(ss / (n - 1.0) / n);
}

EstimateReport compose(const SampleSet& est, const FlowModel& model,
                       const UmConfig& cfg, bool nf_only) {
  if (est.n() < cfg.k + 1)
    throw TooFewSamples("um: estimation split smaller than k+1");
  const UniformizedSet u = uniformize(model, est);
  const double corr_mean = index_order_mean(u.corrections);

  EstimateReport r;
  r.k = cfg.k;
  r.n_used = est.n();
  r.d = est.dim();
  r.seed = cfg.seed;
  r.correction = corr_mean;
  if (nf_only) {
    r.estimator = "NF";
    r.value = corr_mean;
    r.std_err = std_error(u.corrections);
  } else {
    const SampleSet zs(u.z);
    const auto [contrib, constant] =
        t_contributions(zs, cfg.base_estimator, cfg.k, cfg.backend);
    const double base = constant + index_order_mean(contrib);
    r.estimator = cfg.base_estimator == EstimatorKind::tKL ? "UM-tKL" : "UM-tKSG";
    r.base_value = base;
    r.value = base + corr_mean;
    r.std_err = std_error(contrib + u.corrections);
  }
  if (!std::isfinite(r.value)) throw NonFinite(r.estimator + ": non-finite estimate");
  return r;
}

FlowModel train_with_retry(const SampleSet& train_set, TrainConfig fc) {
  try {
    return train(train_set, fc);
  } catch (const Diverged&) {
    fc.learning_rate *= 0.5;
    return train(train_set, fc);
  }
}

EstimateReport run_split_pipeline(const SampleSet& samples, const UmConfig& cfg,
                                  bool nf_only) {
  const auto t0 = Clock::now();
  check_base(cfg);
  const long n = samples.n();
  if (n < 4) throw TooFewSamples("um: need at least 4 samples to split");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
    throw ConfigError("um: split_fraction must be in (0,1)");

  RngStream rng(cfg.seed);
  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  long n_train = std::lround(cfg.split_fraction * static_cast<double>(n));
  n_train = std::max<long>(1, std::min(n_train, n - 1));
  if (n_train < cfg.k + 1 || n - n_train < cfg.k + 1)
    throw TooFewSamples("um: split smaller than k+1");

  const SampleSet train_set =
      samples.select_rows({idx.begin(), idx.begin() + n_train});
  TrainConfig fc = cfg.flow;
  fc.seed = RngStream(cfg.seed).substream(1).seed();
  const FlowModel model = train_with_retry(train_set, fc);

  EstimateReport r;
  if (cfg.reuse_train_for_estimate) {
    r = compose(samples, model, cfg, nf_only);
  } else {
    r = compose(samples.select_rows({idx.begin() + n_train, idx.end()}), model,
                cfg, nf_only);
  }
  r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

}  // namespace

UniformizedSet uniformize(const FlowModel& model, const SampleSet& samples) {
  if (model.d != samples.dim())
    throw ConfigError("uniformize: model dimension mismatch");
  Matrix y;
  Vector log_det;
  model.push_to_base_batch(samples.data(), y, log_det);
  const long n = samples.n(), d = samples.dim();
  UniformizedSet u;
  u.z.resize(n, d);
  u.corrections.resize(n);
  for (long i = 0; i < n; ++i) {
    double log_phi_sum = 0.0;
    for (long j = 0; j < d; ++j) {
      u.z(i, j) = gaussian_cdf(y(i, j));
      log_phi_sum += normal_log_pdf(y(i, j));
    }
    u.corrections[i] = -(log_phi_sum + log_det[i]);
  }
  if (!u.corrections.allFinite())
    throw NonFinite("uniformize: non-finite correction");
  return u;
}

EstimateReport um_estimate(const SampleSet& samples, const UmConfig& cfg) {
  return run_split_pipeline(samples, cfg, false);
}

EstimateReport um_estimate_frozen(const SampleSet& samples, const FlowModel& model,
                                  const UmConfig& cfg) {
  const auto t0 = Clock::now();
  check_base(cfg);
  auto r = compose(samples, model, cfg, false);
  r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

EstimateReport nf_only_estimate(const SampleSet& samples, const UmConfig& cfg) {
  return run_split_pipeline(samples, cfg, true);
}

EstimateReport nf_only_estimate_frozen(const SampleSet& samples,
                                       const FlowModel& model,
                                       const UmConfig& cfg) {
  const auto t0 = Clock::now();
  check_base(cfg);
  auto r = compose(samples, model, cfg, true);
  r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

}  // namespace uent
