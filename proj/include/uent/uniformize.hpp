#pragma once

#include "uent/estimators.hpp"
#include "uent/flow.hpp"

namespace uent {

struct UniformizedSet {
  Matrix z;            // N x d, strictly inside (0,1)^d via cdf clamping
  Vector corrections;  // log|det df^{-1}(z_i)/dz| in nats
};

struct UmConfig {
  EstimatorKind base_estimator = EstimatorKind::tKSG;  // tKL or tKSG
  int k = 1;
  double split_fraction = 0.5;  // fraction used to train the flow
  // Ablation switch: estimate on the full set instead of the held-out half.
  bool reuse_train_for_estimate = false;
  TrainConfig flow;
  std::uint64_t seed = 0;
  KnnBackend backend = KnnBackend::Auto;
};

// z = Phi(g(x)); correction_i = -(sum_j log phi(y_j) + log|det dg(x_i)/dx|).
UniformizedSet uniformize(const FlowModel& model, const SampleSet& samples);

// Seeded shuffle split, flow training on the train part (one retry at half
// learning rate if training diverges), truncated estimate on the uniformized
// half plus the mean correction. The report carries both addends and the
// combined per-point standard error.
EstimateReport um_estimate(const SampleSet& samples, const UmConfig& cfg);

// Same composition with a caller-supplied flow; no split, the full set is
// used for estimation.
EstimateReport um_estimate_frozen(const SampleSet& samples, const FlowModel& model,
                                  const UmConfig& cfg);

// Flow-only estimate: just the mean correction term of the same pipeline.
EstimateReport nf_only_estimate(const SampleSet& samples, const UmConfig& cfg);
EstimateReport nf_only_estimate_frozen(const SampleSet& samples,
                                       const FlowModel& model, const UmConfig& cfg);

}  // namespace uent
