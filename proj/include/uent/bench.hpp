#pragma once

#include "uent/distributions.hpp"
#include "uent/estimators.hpp"
#include "uent/oed.hpp"
#include "uent/timeseries.hpp"
#include "uent/uniformize.hpp"

#include <json.hpp>

namespace uent {

inline constexpr const char* kVersion = "1.0.0";

enum class ExperimentKind {
  BetaSweep,
  GaussianSweep,
  RosenbrockSweep,
  EntropyRate,
  Oed,
  SingleEstimate
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

// One harness config covering every experiment family. JSON round-trips via
// config_to_json / config_from_json; the manifest embeds the same document so
// a run can be reproduced bitwise from its manifest alone.
struct BenchmarkConfig {
  ExperimentKind kind = ExperimentKind::SingleEstimate;
  std::vector<std::string> estimators = {"tKL"};
  std::vector<long> sweep;  // d (beta/gaussian/even), n2 (hybrid)
  long n = 1000;
  int trials = 10;
  int k = 1;
  std::uint64_t base_seed = 0;
  std::string output_csv = "results.csv";
  std::string output_manifest = "manifest.json";

  // single-estimate: either a fixed input file or a distribution draw
  std::string input_csv;
  DistributionSpec dist = StdNormal{1};

  // sweep shape parameters
  double beta_b = 2.0;
  std::string rosenbrock_variant = "hybrid";  // or "even"
  HybridRosenbrock hybrid = {};
  EvenRosenbrock even = {};

  // truncated estimators on unbounded data: explicit min-max rescale with the
  // log-volume added back (off by default; silently rescaling would be wrong)
  bool rescale_to_cube = false;

  // UM settings
  double split_fraction = 0.5;
  TrainConfig flow;
  bool identity_flow = false;  // frozen identity map instead of training

  // entropy-rate settings
  std::string ar_model = "ar3";
  long T = 10000;
  int p = 3;
  long burn_in = 1000;

  // OED settings
  LvConfig lv;
  long nmc_m = 2000;
  long nmc_n_inner = 2000;
  int schedule_points = 5;
  std::string design_estimator = "KSG";
};

nlohmann::json config_to_json(const BenchmarkConfig& cfg);
BenchmarkConfig config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EstimateReport& r);

nlohmann::json spec_to_json(const DistributionSpec& spec);
DistributionSpec spec_from_json(const nlohmann::json& j);

struct BenchmarkOutcome {
  long rows_written = 0;
  double wall_time = 0.0;
};

// Writes per-trial CSV rows (experiment, estimator, d, n, k, trial, seed,
// estimate, truth, error, in that order) plus a JSON manifest. Rows are
// flushed as they are produced; on an estimator error the manifest is written
// with status "partial" before the error propagates.
BenchmarkOutcome run_benchmark(const BenchmarkConfig& cfg);

// Re-runs the config embedded in a manifest (bitwise-identical CSV output).
BenchmarkOutcome run_from_manifest(const std::string& manifest_path);

// Applies any supported estimator name (KL, KSG, tKL, tKSG, UM-tKL, UM-tKSG,
// NF) to one sample set under the config's settings.
EstimateReport apply_estimator(const std::string& name, const SampleSet& data,
                               const BenchmarkConfig& cfg, std::uint64_t seed);

}  // namespace uent
