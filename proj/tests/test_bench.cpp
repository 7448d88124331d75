#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "uent/bench.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace uent;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void scrub(std::initializer_list<std::string> paths) {
  for (const auto& p : paths) std::remove(p.c_str());
}

}  // namespace

TEST_CASE("experiment names round trip") {
  for (ExperimentKind kind :
       {ExperimentKind::BetaSweep, ExperimentKind::GaussianSweep,
        ExperimentKind::RosenbrockSweep, ExperimentKind::EntropyRate,
        ExperimentKind::Oed, ExperimentKind::SingleEstimate}) {
    CHECK(experiment_from_name(experiment_name(kind)) == kind);
  }
  CHECK_THROWS_AS(experiment_from_name("bogus"), ConfigError);
}

TEST_CASE("distribution specs round trip through JSON") {
  const std::vector<DistributionSpec> specs = {
      StdNormal{6},
      SymBeta{3, 1.75},
      HybridRosenbrock{5, 2, 1.5, 0.2, 0.75},
      EvenRosenbrock{4, 0.5, 8.0},
      HybridRosenbrockUniform{4, 1, 1.0, 0.1, 1.0},
      EvenRosenbrockUniform{2, 0.0, 0.025},
  };
  for (const auto& spec : specs) {
    const DistributionSpec back = spec_from_json(spec_to_json(spec));
    CHECK(family_name(back) == family_name(spec));
    CHECK(dimension(back) == dimension(spec));
    CHECK(analytic_entropy(back) == analytic_entropy(spec));
  }
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"family", "unknown"}}),
                  ConfigError);
}

TEST_CASE("config JSON round trip preserves every field it writes") {
  BenchmarkConfig cfg;
  cfg.kind = ExperimentKind::BetaSweep;
  cfg.estimators = {"tKL", "UM-tKSG"};
  cfg.sweep = {1, 3, 10};
  cfg.n = 512;
  cfg.trials = 4;
  cfg.k = 3;
  cfg.base_seed = 777;
  cfg.output_csv = "x.csv";
  cfg.output_manifest = "x.json";
  cfg.beta_b = 1.25;
  cfg.rescale_to_cube = true;
  cfg.split_fraction = 0.4;
  cfg.flow.n_layers = 2;
  cfg.flow.hidden_width = 24;
  cfg.flow.epochs = 55;
  cfg.flow.learning_rate = 5e-4;
  cfg.identity_flow = true;
  cfg.ar_model = "ar7";
  cfg.T = 4321;
  cfg.p = 7;
  cfg.burn_in = 99;
  cfg.lv.noise_variance = 0.04;
  cfg.nmc_m = 100;
  cfg.nmc_n_inner = 200;
  cfg.schedule_points = 3;
  cfg.design_estimator = "tKL";
  cfg.dist = SymBeta{2, 0.5};

  const BenchmarkConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.kind == cfg.kind);
  CHECK(back.estimators == cfg.estimators);
  CHECK(back.sweep == cfg.sweep);
  CHECK(back.n == cfg.n);
  CHECK(back.trials == cfg.trials);
  CHECK(back.k == cfg.k);
  CHECK(back.base_seed == cfg.base_seed);
  CHECK(back.output_csv == cfg.output_csv);
  CHECK(back.beta_b == cfg.beta_b);
  CHECK(back.rescale_to_cube == cfg.rescale_to_cube);
  CHECK(back.split_fraction == cfg.split_fraction);
  CHECK(back.flow.n_layers == cfg.flow.n_layers);
  CHECK(back.flow.hidden_width == cfg.flow.hidden_width);
  CHECK(back.flow.epochs == cfg.flow.epochs);
  CHECK(back.flow.learning_rate == cfg.flow.learning_rate);
  CHECK(back.identity_flow == cfg.identity_flow);
  CHECK(back.ar_model == cfg.ar_model);
  CHECK(back.T == cfg.T);
  CHECK(back.p == cfg.p);
  CHECK(back.burn_in == cfg.burn_in);
  CHECK(back.lv.noise_variance == cfg.lv.noise_variance);
  CHECK(back.nmc_m == cfg.nmc_m);
  CHECK(back.nmc_n_inner == cfg.nmc_n_inner);
  CHECK(back.schedule_points == cfg.schedule_points);
  CHECK(back.design_estimator == cfg.design_estimator);
  CHECK(family_name(back.dist) == "sym_beta");
}

TEST_CASE("apply_estimator covers every name") {
  const SampleSet cube = sample(SymBeta{2, 2.0}, 300, 11);
  const SampleSet gauss = sample(StdNormal{2}, 300, 12);
  BenchmarkConfig cfg;
  cfg.k = 1;
  cfg.identity_flow = true;  // frozen identity keeps the UM names fast
  for (const char* name : {"KL", "KSG"}) {
    const EstimateReport r = apply_estimator(name, gauss, cfg, 5);
    CHECK(r.estimator == name);
    CHECK(std::isfinite(r.value));
  }
  for (const char* name : {"tKL", "tKSG"}) {
    const EstimateReport r = apply_estimator(name, cube, cfg, 5);
    CHECK(r.estimator == name);
    CHECK(std::isfinite(r.value));
  }
  for (const char* name : {"UM-tKL", "UM-tKSG", "NF"}) {
    const EstimateReport r = apply_estimator(name, gauss, cfg, 5);
    CHECK(r.estimator == name);
    CHECK(std::isfinite(r.value));
  }
  CHECK_THROWS_AS(apply_estimator("woo", cube, cfg, 5), ConfigError);
}

TEST_CASE("truncated estimators on unbounded data need the rescale flag") {
  const SampleSet gauss = sample(StdNormal{2}, 200, 21);
  BenchmarkConfig cfg;
  CHECK_THROWS_AS(apply_estimator("tKL", gauss, cfg, 1), OutOfDomain);
  cfg.rescale_to_cube = true;
  const EstimateReport r = apply_estimator("tKL", gauss, cfg, 1);
  // Rescale is exactly compensated: estimate plus log-volume of the box.
  const RescaleResult rs = minmax_rescale(gauss);
  const EstimateReport direct = tkl_estimate(rs.scaled, 1);
  CHECK(r.value == direct.value + rs.log_volume);
}

TEST_CASE("report JSON carries the decomposition") {
  const SampleSet gauss = sample(StdNormal{1}, 100, 31);
  BenchmarkConfig cfg;
  cfg.identity_flow = true;
  const EstimateReport r = apply_estimator("UM-tKL", gauss, cfg, 7);
  const nlohmann::json j = report_to_json(r);
  CHECK(j.at("estimator") == "UM-tKL");
  CHECK(j.at("value").get<double>() == r.value);
  CHECK(j.at("base_value").get<double>() == r.base_value.value());
  CHECK(j.at("correction").get<double>() == r.correction.value());
  CHECK(j.at("n_used").get<long>() == 100);
}

TEST_CASE("a small sweep writes rows, truth, and a complete manifest") {
  BenchmarkConfig cfg;
  cfg.kind = ExperimentKind::BetaSweep;
  cfg.estimators = {"tKL", "tKSG"};
  cfg.sweep = {1, 2};
  cfg.n = 200;
  cfg.trials = 2;
  cfg.base_seed = 404;
  cfg.beta_b = 2.0;
  cfg.output_csv = "test_bench_sweep.csv";
  cfg.output_manifest = "test_bench_sweep_manifest.json";
  const BenchmarkOutcome out = run_benchmark(cfg);
  CHECK(out.rows_written == 8);  // 2 dims x 2 estimators x 2 trials

  const std::string csv = slurp(cfg.output_csv);
  CHECK(csv.rfind("experiment,estimator,d,n,k,trial,seed,estimate,truth,error",
                  0) == 0);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
    CHECK(line.find("beta-sweep") != std::string::npos);
  }
  CHECK(rows == 8);

  nlohmann::json manifest;
  std::ifstream(cfg.output_manifest) >> manifest;
  CHECK(manifest.at("status") == "complete");
  CHECK(manifest.at("rows_written") == 8);
  CHECK(manifest.at("version") == kVersion);
  CHECK(manifest.contains("config"));
  scrub({cfg.output_csv, cfg.output_manifest});
}

TEST_CASE("rerun from manifest reproduces the CSV bitwise") {
  BenchmarkConfig cfg;
  cfg.kind = ExperimentKind::GaussianSweep;
  cfg.estimators = {"KL"};
  cfg.sweep = {1, 3};
  cfg.n = 150;
  cfg.trials = 2;
  cfg.base_seed = 1234;
  cfg.output_csv = "test_bench_rr.csv";
  cfg.output_manifest = "test_bench_rr_manifest.json";
  run_benchmark(cfg);
  const std::string first = slurp(cfg.output_csv);
  std::remove(cfg.output_csv.c_str());
  run_from_manifest(cfg.output_manifest);
  const std::string second = slurp(cfg.output_csv);
  CHECK(first == second);
  scrub({cfg.output_csv, cfg.output_manifest});
}

TEST_CASE("estimator failure leaves a partial manifest") {
  BenchmarkConfig cfg;
  cfg.kind = ExperimentKind::GaussianSweep;
  cfg.estimators = {"tKL"};  // Gaussian data off the cube, no rescale flag
  cfg.sweep = {2};
  cfg.n = 100;
  cfg.trials = 1;
  cfg.rescale_to_cube = false;
  cfg.output_csv = "test_bench_fail.csv";
  cfg.output_manifest = "test_bench_fail_manifest.json";
  CHECK_THROWS_AS(run_benchmark(cfg), OutOfDomain);
  nlohmann::json manifest;
  std::ifstream(cfg.output_manifest) >> manifest;
  CHECK(manifest.at("status") == "partial");
  CHECK(manifest.contains("error"));
  scrub({cfg.output_csv, cfg.output_manifest});
}

TEST_CASE("single estimate on a fixed input file") {
  const SampleSet data = sample(SymBeta{2, 2.0}, 250, 77);
  save_csv("test_bench_input.csv", data);
  BenchmarkConfig cfg;
  cfg.kind = ExperimentKind::SingleEstimate;
  cfg.estimators = {"tKL"};
  cfg.input_csv = "test_bench_input.csv";
  cfg.trials = 1;
  cfg.output_csv = "test_bench_single.csv";
  cfg.output_manifest = "test_bench_single_manifest.json";
  const BenchmarkOutcome out = run_benchmark(cfg);
  CHECK(out.rows_written == 1);
  const std::string csv = slurp(cfg.output_csv);
  const EstimateReport direct = tkl_estimate(data, 1);
  CHECK(csv.find(format_double(direct.value)) != std::string::npos);
  scrub({"test_bench_input.csv", cfg.output_csv, cfg.output_manifest});
}
