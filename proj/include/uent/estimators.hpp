#pragma once

#include "uent/common.hpp"
#include "uent/knn.hpp"

namespace uent {

enum class EstimatorKind { KL, KSG, tKL, tKSG };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::KL;
  int k = 1;
  Norm p = Norm::Linf;  // KL only; the other three are sup-norm by definition
  KnnBackend backend = KnnBackend::Auto;
};

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// All estimates are in nats. Per-point contributions are reduced in index
// order; std_err is the within-sample standard error of those contributions.
EstimateReport kl_estimate(const SampleSet& s, const EstimatorConfig& cfg);
EstimateReport ksg_estimate(const SampleSet& s, int k,
                            KnnBackend backend = KnnBackend::Auto);
// tKL/tKSG require unit-cube samples and never rescale silently.
EstimateReport tkl_estimate(const SampleSet& s, int k,
                            KnnBackend backend = KnnBackend::Auto);
EstimateReport tksg_estimate(const SampleSet& s, int k,
                             KnnBackend backend = KnnBackend::Auto);

EstimateReport estimate(const SampleSet& s, const EstimatorConfig& cfg);

// Per-point sums of log truncated side lengths plus the additive constant for
// tKL/tKSG, so callers composing corrections can keep the exact decomposition
// value = constant + mean(contrib). Throws ConfigError for other kinds.
std::pair<Vector, double> t_contributions(const SampleSet& s, EstimatorKind kind,
                                          int k,
                                          KnnBackend backend = KnnBackend::Auto);

// Maps each coordinate to [0,1] by its sample min/max. The transform changes
// the entropy by -log_volume, i.e. H(original) = H(scaled) + log_volume.
struct RescaleResult {
  SampleSet scaled;
  double log_volume;  // sum of log per-dimension extents
  Vector lo, hi;
};
RescaleResult minmax_rescale(const SampleSet& s);

}  // namespace uent
