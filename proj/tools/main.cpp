// Command-line front end: estimate / bench / rate / oed subcommands over the
// shared library. Config files are JSON; explicit flags override config-file
// values, which override defaults. Exit codes: 0 ok, 2 usage or config error,
// 3 runtime failure (divergence, bad data, ...).
#include "uent/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw uent::ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw uent::ConfigError("bad json in " + path + ": " + e.what());
  }
  return j;
}

struct CommonOpts {
  std::string config_path;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<long> n;
  std::optional<int> trials;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("-k,--neighbors", opts.k, "neighbor order k");
  cmd->add_option("--seed", opts.seed, "base RNG seed");
  cmd->add_option("-n,--samples", opts.n, "sample count per trial");
  cmd->add_option("--trials", opts.trials, "independent trials");
}

uent::BenchmarkConfig build_config(const CommonOpts& opts) {
  uent::BenchmarkConfig cfg;
  if (!opts.config_path.empty())
    cfg = uent::config_from_json(load_json_file(opts.config_path));
  if (opts.k) cfg.k = *opts.k;
  if (opts.seed) cfg.base_seed = *opts.seed;
  if (opts.n) cfg.n = *opts.n;
  if (opts.trials) cfg.trials = *opts.trials;
  return cfg;
}

int cmd_estimate(const CommonOpts& opts, const std::string& input,
                 const std::string& estimator, const std::string& report_path) {
  uent::BenchmarkConfig cfg = build_config(opts);
  const uent::SampleSet data = uent::load_csv(input);
  const uent::EstimateReport r =
      uent::apply_estimator(estimator, data, cfg, cfg.base_seed);
  const json out = uent::report_to_json(r);
  if (report_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::ofstream f(report_path);
    if (!f) throw uent::ConfigError("cannot open for write: " + report_path);
    f << out.dump(2) << "\n";
    std::cout << uent::format_double(r.value) << "\n";
  }
  return 0;
}

int cmd_bench(const CommonOpts& opts, const std::string& from_manifest) {
  const uent::BenchmarkOutcome out =
      from_manifest.empty() ? uent::run_benchmark(build_config(opts))
                            : uent::run_from_manifest(from_manifest);
  std::cout << "rows=" << out.rows_written << " wall_time="
            << uent::format_double(out.wall_time) << "\n";
  return 0;
}

int cmd_rate(const CommonOpts& opts, const std::string& estimator) {
  uent::BenchmarkConfig cfg = build_config(opts);
  cfg.kind = uent::ExperimentKind::EntropyRate;
  cfg.estimators = {estimator};
  const uent::BenchmarkOutcome out = uent::run_benchmark(cfg);
  std::cout << "rows=" << out.rows_written << " wall_time="
            << uent::format_double(out.wall_time) << "\n";
  return 0;
}

int cmd_oed(const CommonOpts& opts, const std::string& schedule_path) {
  uent::BenchmarkConfig cfg = build_config(opts);
  cfg.kind = uent::ExperimentKind::Oed;
  const uent::DesignEstimator est = [&](const uent::SampleSet& data, double* se) {
    const uent::EstimateReport r =
        uent::apply_estimator(cfg.design_estimator, data, cfg, cfg.base_seed);
    if (se) *se = r.std_err.value_or(0.0);
    return r.value;
  };
  const uent::MesResult res =
      uent::mes_search(uent::default_design_grid(), cfg.lv, cfg.n, est,
                       cfg.base_seed, cfg.schedule_points);
  uent::save_utility_csv(cfg.output_csv, res.table);
  if (!schedule_path.empty()) uent::save_schedule_json(schedule_path, res.best);
  std::cout << "best alpha=" << uent::format_double(res.best.alpha)
            << " beta=" << uent::format_double(res.best.beta) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-NN and flow-based differential entropy estimation"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string input, estimator = "tKSG", report_path, from_manifest;
  std::string schedule_path;

  CLI::App* est = app.add_subcommand("estimate", "entropy of a CSV sample");
  add_common(est, opts);
  est->add_option("input", input, "CSV file, header x1..xd")->required();
  est->add_option("-e,--estimator", estimator,
                  "KL | KSG | tKL | tKSG | UM-tKL | UM-tKSG | NF");
  est->add_option("--report", report_path, "write full JSON report here");

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark config");
  add_common(bench, opts);
  bench->add_option("--from-manifest", from_manifest,
                    "re-run the config embedded in a manifest");

  CLI::App* rate = app.add_subcommand("rate", "entropy rate of an AR series");
  add_common(rate, opts);
  rate->add_option("-e,--estimator", estimator, "block entropy estimator");

  CLI::App* oed = app.add_subcommand("oed", "design search for the sampling schedule");
  add_common(oed, opts);
  oed->add_option("--schedule-out", schedule_path, "write best schedule JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) return cmd_estimate(opts, input, estimator, report_path);
    if (bench->parsed()) return cmd_bench(opts, from_manifest);
    if (rate->parsed()) return cmd_rate(opts, estimator);
    if (oed->parsed()) return cmd_oed(opts, schedule_path);
  } catch (const uent::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const uent::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
