#include "uent/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace uent {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

}  // namespace

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::BetaSweep: return "beta-sweep";
    case ExperimentKind::GaussianSweep: return "gaussian-sweep";
    case ExperimentKind::RosenbrockSweep: return "rosenbrock-sweep";
    case ExperimentKind::EntropyRate: return "entropy-rate";
    case ExperimentKind::Oed: return "oed";
    case ExperimentKind::SingleEstimate: return "single-estimate";
  }
  return "?";
}

ExperimentKind experiment_from_name(const std::string& name) {
  if (name == "beta-sweep") return ExperimentKind::BetaSweep;
  if (name == "gaussian-sweep") return ExperimentKind::GaussianSweep;
  if (name == "rosenbrock-sweep") return ExperimentKind::RosenbrockSweep;
  if (name == "entropy-rate") return ExperimentKind::EntropyRate;
  if (name == "oed") return ExperimentKind::Oed;
  if (name == "single-estimate") return ExperimentKind::SingleEstimate;
  throw ConfigError("unknown experiment kind: " + name);
}

json spec_to_json(const DistributionSpec& spec) {
  json j;
  j["family"] = family_name(spec);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StdNormal>) {
          j["d"] = p.d;
        } else if constexpr (std::is_same_v<T, SymBeta>) {
          j["d"] = p.d;
          j["b"] = p.b;
        } else if constexpr (std::is_same_v<T, HybridRosenbrock> ||
                             std::is_same_v<T, HybridRosenbrockUniform>) {
          j["n1"] = p.n1;
          j["n2"] = p.n2;
          j["a"] = p.a;
          j["b"] = p.b;
          j["mu"] = p.mu;
        } else {
          j["d"] = p.d;
          j["mu_odd"] = p.mu_odd;
          j["c"] = p.c;
        }
      },
      spec);
  return j;
}

DistributionSpec spec_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "std_normal") return StdNormal{j.at("d").get<long>()};
  if (family == "sym_beta")
    return SymBeta{j.at("d").get<long>(), j.at("b").get<double>()};
  if (family == "hybrid_rosenbrock" || family == "hybrid_rosenbrock_uniform") {
    const long n1 = j.at("n1").get<long>(), n2 = j.at("n2").get<long>();
    const double a = j.at("a").get<double>(), b = j.at("b").get<double>();
    const double mu = j.at("mu").get<double>();
    if (family == "hybrid_rosenbrock") return HybridRosenbrock{n1, n2, a, b, mu};
    return HybridRosenbrockUniform{n1, n2, a, b, mu};
  }
  if (family == "even_rosenbrock")
    return EvenRosenbrock{j.at("d").get<long>(), j.at("mu_odd").get<double>(),
                          j.at("c").get<double>()};
  if (family == "even_rosenbrock_uniform")
    return EvenRosenbrockUniform{j.at("d").get<long>(), j.at("mu_odd").get<double>(),
                                 j.at("c").get<double>()};
  throw ConfigError("unknown distribution family: " + family);
}

json config_to_json(const BenchmarkConfig& cfg) {
  json j;
  j["kind"] = experiment_name(cfg.kind);
  j["estimators"] = cfg.estimators;
  j["sweep"] = cfg.sweep;
  j["n"] = cfg.n;
  j["trials"] = cfg.trials;
  j["k"] = cfg.k;
  j["base_seed"] = cfg.base_seed;
  j["output_csv"] = cfg.output_csv;
  j["output_manifest"] = cfg.output_manifest;
  j["input_csv"] = cfg.input_csv;
  j["distribution"] = spec_to_json(cfg.dist);
  j["beta_b"] = cfg.beta_b;
  j["rosenbrock_variant"] = cfg.rosenbrock_variant;
  j["hybrid"] = spec_to_json(cfg.hybrid);
  j["even"] = spec_to_json(cfg.even);
  j["rescale_to_cube"] = cfg.rescale_to_cube;
  j["split_fraction"] = cfg.split_fraction;
  j["flow"] = {{"n_layers", cfg.flow.n_layers},
               {"hidden_width", cfg.flow.hidden_width},
               {"epochs", cfg.flow.epochs},
               {"batch_size", cfg.flow.batch_size},
               {"learning_rate", cfg.flow.learning_rate},
               {"val_fraction", cfg.flow.val_fraction},
               {"patience", cfg.flow.patience}};
  j["identity_flow"] = cfg.identity_flow;
  j["ar_model"] = cfg.ar_model;
  j["T"] = cfg.T;
  j["p"] = cfg.p;
  j["burn_in"] = cfg.burn_in;
  j["lv"] = {{"a_lo", cfg.lv.a_lo},       {"a_hi", cfg.lv.a_hi},
             {"b_lo", cfg.lv.b_lo},       {"b_hi", cfg.lv.b_hi},
             {"x0", cfg.lv.x0},           {"y0", cfg.lv.y0},
             {"noise_variance", cfg.lv.noise_variance},
             {"t_end", cfg.lv.t_end},     {"dt", cfg.lv.dt}};
  j["nmc_m"] = cfg.nmc_m;
  j["nmc_n_inner"] = cfg.nmc_n_inner;
  j["schedule_points"] = cfg.schedule_points;
  j["design_estimator"] = cfg.design_estimator;
  return j;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

BenchmarkConfig config_from_json(const json& j) {
  BenchmarkConfig cfg;
  if (j.contains("kind")) cfg.kind = experiment_from_name(j.at("kind").get<std::string>());
  maybe(j, "estimators", cfg.estimators);
  maybe(j, "sweep", cfg.sweep);
  maybe(j, "n", cfg.n);
  maybe(j, "trials", cfg.trials);
  maybe(j, "k", cfg.k);
  maybe(j, "base_seed", cfg.base_seed);
  maybe(j, "output_csv", cfg.output_csv);
  maybe(j, "output_manifest", cfg.output_manifest);
  maybe(j, "input_csv", cfg.input_csv);
  if (j.contains("distribution")) cfg.dist = spec_from_json(j.at("distribution"));
  maybe(j, "beta_b", cfg.beta_b);
  maybe(j, "rosenbrock_variant", cfg.rosenbrock_variant);
  if (j.contains("hybrid"))
    cfg.hybrid = std::get<HybridRosenbrock>(spec_from_json(j.at("hybrid")));
  if (j.contains("even"))
    cfg.even = std::get<EvenRosenbrock>(spec_from_json(j.at("even")));
  maybe(j, "rescale_to_cube", cfg.rescale_to_cube);
  maybe(j, "split_fraction", cfg.split_fraction);
  if (j.contains("flow")) {
    const json& f = j.at("flow");
    maybe(f, "n_layers", cfg.flow.n_layers);
    maybe(f, "hidden_width", cfg.flow.hidden_width);
    maybe(f, "epochs", cfg.flow.epochs);
    maybe(f, "batch_size", cfg.flow.batch_size);
    maybe(f, "learning_rate", cfg.flow.learning_rate);
    maybe(f, "val_fraction", cfg.flow.val_fraction);
    maybe(f, "patience", cfg.flow.patience);
  }
  maybe(j, "identity_flow", cfg.identity_flow);
  maybe(j, "ar_model", cfg.ar_model);
  maybe(j, "T", cfg.T);
  maybe(j, "p", cfg.p);
  maybe(j, "burn_in", cfg.burn_in);
  if (j.contains("lv")) {
    const json& l = j.at("lv");
    maybe(l, "a_lo", cfg.lv.a_lo);
    maybe(l, "a_hi", cfg.lv.a_hi);
    maybe(l, "b_lo", cfg.lv.b_lo);
    maybe(l, "b_hi", cfg.lv.b_hi);
    maybe(l, "x0", cfg.lv.x0);
    maybe(l, "y0", cfg.lv.y0);
    maybe(l, "noise_variance", cfg.lv.noise_variance);
    maybe(l, "t_end", cfg.lv.t_end);
    maybe(l, "dt", cfg.lv.dt);
  }
  maybe(j, "nmc_m", cfg.nmc_m);
  maybe(j, "nmc_n_inner", cfg.nmc_n_inner);
  maybe(j, "schedule_points", cfg.schedule_points);
  maybe(j, "design_estimator", cfg.design_estimator);
  return cfg;
}

json report_to_json(const EstimateReport& r) {
  json j;
  j["value"] = r.value;
  j["estimator"] = r.estimator;
  j["k"] = r.k;
  j["norm"] = r.norm;
  j["n_used"] = r.n_used;
  j["d"] = r.d;
  if (r.seed) j["seed"] = *r.seed;
  j["wall_time"] = r.wall_time;
  j["rng"] = r.rng;
  if (r.base_value) j["base_value"] = *r.base_value;
  if (r.correction) j["correction"] = *r.correction;
  if (r.std_err) j["std_err"] = *r.std_err;
  return j;
}

EstimateReport apply_estimator(const std::string& name, const SampleSet& data,
                               const BenchmarkConfig& cfg, std::uint64_t seed) {
  const auto um_config = [&](EstimatorKind base) {
    UmConfig um;
    um.base_estimator = base;
    um.k = cfg.k;
    um.split_fraction = cfg.split_fraction;
    um.flow = cfg.flow;
    um.seed = seed;
    return um;
  };
  const auto run_um = [&](EstimatorKind base, bool nf) {
    const UmConfig um = um_config(base);
    if (cfg.identity_flow) {
      RngStream rng(seed);
      const FlowModel identity =
          make_flow(data.dim(), cfg.flow.n_layers, cfg.flow.hidden_width, rng);
      return nf ? nf_only_estimate_frozen(data, identity, um)
                : um_estimate_frozen(data, identity, um);
    }
    return nf ? nf_only_estimate(data, um) : um_estimate(data, um);
  };

  if (name == "UM-tKL") return run_um(EstimatorKind::tKL, false);
  if (name == "UM-tKSG") return run_um(EstimatorKind::tKSG, false);
  if (name == "NF") return run_um(EstimatorKind::tKSG, true);

  const EstimatorKind kind = estimator_from_name(name);
  const bool truncated = kind == EstimatorKind::tKL || kind == EstimatorKind::tKSG;
  EstimatorConfig ec;
  ec.kind = kind;
  ec.k = cfg.k;
  if (truncated && cfg.rescale_to_cube) {
    const RescaleResult rs = minmax_rescale(data);
    EstimateReport r = estimate(rs.scaled, ec);
    r.value += rs.log_volume;  // undo the box-normalizing change of variables
    r.seed = seed;
    return r;
  }
  EstimateReport r = estimate(data, ec);
  r.seed = seed;
  return r;
}

namespace {

struct CsvWriter {
  std::ofstream out;
  long rows = 0;

  explicit CsvWriter(const std::string& path) : out(path) {
    if (!out) throw ConfigError("cannot open for write: " + path);
    out << "experiment,estimator,d,n,k,trial,seed,estimate,truth,error\n";
    out.flush();
  }

  void row(const std::string& experiment, const std::string& estimator, long d,
           long n, int k, int trial, std::uint64_t seed, double estimate,
           double truth) {
    out << experiment << "," << estimator << "," << d << "," << n << "," << k
        << "," << trial << "," << seed << "," << format_double(estimate) << ","
        << format_double(truth) << "," << format_double(estimate - truth) << "\n";
    out.flush();
    ++rows;
  }
};

void run_sweep_trials(const BenchmarkConfig& cfg, const DistributionSpec& spec,
                      CsvWriter& csv) {
  const std::string exp = experiment_name(cfg.kind);
  const double truth = analytic_entropy(spec);
  const long d = dimension(spec);
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
    const SampleSet data = sample(spec, cfg.n, seed);
    for (const std::string& est : cfg.estimators) {
      const EstimateReport r = apply_estimator(est, data, cfg, seed);
      csv.row(exp, est, d, cfg.n, cfg.k, trial, seed, r.value, truth);
    }
  }
}

ArModel ar_by_name(const std::string& name) {
  if (name == "ar3") return ar3();
  if (name == "ar7") return ar7();
  if (name == "ar15") return ar15();
  throw ConfigError("unknown AR model: " + name);
}

void run_rate(const BenchmarkConfig& cfg, CsvWriter& csv) {
  const ArModel model = ar_by_name(cfg.ar_model);
  const double truth = true_gaussian_rate(model.noise_sigma);
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
    const Trajectory traj = simulate_ar(model, cfg.T, cfg.burn_in, seed);
    for (const std::string& est : cfg.estimators) {
      RateEstimator re;
      if (est == "UM-tKL" || est == "UM-tKSG") {
        UmConfig um;
        um.base_estimator =
            est == "UM-tKL" ? EstimatorKind::tKL : EstimatorKind::tKSG;
        um.k = cfg.k;
        um.split_fraction = cfg.split_fraction;
        um.flow = cfg.flow;
        um.seed = seed;
        re = um;
      } else {
        EstimatorConfig ec;
        ec.kind = estimator_from_name(est);
        ec.k = cfg.k;
        re = ec;
      }
      const EstimateReport r = entropy_rate(traj, cfg.p, re);
      csv.row("entropy-rate", est, cfg.p + 1, cfg.T, cfg.k, trial, seed, r.value,
              truth);
    }
  }
}

void run_oed(const BenchmarkConfig& cfg, CsvWriter& csv) {
  const std::string est_name = cfg.design_estimator;
  const DesignEstimator est = [&](const SampleSet& data, double* se) {
    const EstimateReport r = apply_estimator(est_name, data, cfg, cfg.base_seed);
    if (se) *se = r.std_err.value_or(0.0);
    return r.value;
  };
  const auto grid = default_design_grid();
  const MesResult res = mes_search(grid, cfg.lv, cfg.n, est, cfg.base_seed,
                                   cfg.schedule_points);
  const double nan = std::nan("");
  for (std::size_t g = 0; g < res.table.size(); ++g) {
    const UtilityRow& row = res.table[g];
    csv.row("oed", est_name, 2L * cfg.schedule_points, cfg.n, cfg.k,
            static_cast<int>(g), cfg.base_seed, row.utility, nan);
  }
  NmcConfig nmc;
  nmc.m_outer = cfg.nmc_m;
  nmc.n_inner = cfg.nmc_n_inner;
  nmc.seed = cfg.base_seed + 1;
  const DesignSchedule equi =
      beta_schedule(1.0, 1.0, cfg.schedule_points, cfg.lv.t_end);
  csv.row("oed", "NMC-selected", 2L * cfg.schedule_points, cfg.nmc_m, cfg.k, 0,
          nmc.seed, nmc_entropy(res.best, cfg.lv, nmc), nan);
  csv.row("oed", "NMC-equidistant", 2L * cfg.schedule_points, cfg.nmc_m, cfg.k, 0,
          nmc.seed, nmc_entropy(equi, cfg.lv, nmc), nan);
}

}  // namespace

BenchmarkOutcome run_benchmark(const BenchmarkConfig& cfg) {
  const auto t0 = Clock::now();
  if (cfg.trials < 1) throw ConfigError("run_benchmark: trials >= 1 required");
  CsvWriter csv(cfg.output_csv);

  const auto write_manifest = [&](const std::string& status,
                                  const std::string& error) {
    json m;
    m["config"] = config_to_json(cfg);
    m["version"] = kVersion;
    m["rng"] = "mt19937_64/splitmix64";
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["rows_written"] = csv.rows;
    m["wall_time"] = std::chrono::duration<double>(Clock::now() - t0).count();
    std::ofstream out(cfg.output_manifest);
    if (!out) throw ConfigError("cannot open for write: " + cfg.output_manifest);
    out << m.dump(2) << "\n";
  };

  try {
    switch (cfg.kind) {
      case ExperimentKind::SingleEstimate: {
        if (!cfg.input_csv.empty()) {
          const SampleSet data = load_csv(cfg.input_csv);
          for (int trial = 0; trial < cfg.trials; ++trial) {
            const std::uint64_t seed =
                cfg.base_seed + static_cast<std::uint64_t>(trial);
            for (const std::string& est : cfg.estimators) {
              const EstimateReport r = apply_estimator(est, data, cfg, seed);
              csv.row("single-estimate", est, data.dim(), data.n(), cfg.k, trial,
                      seed, r.value, std::nan(""));
            }
          }
        } else {
          run_sweep_trials(cfg, cfg.dist, csv);
        }
        break;
      }
      case ExperimentKind::BetaSweep: {
        for (const long d : cfg.sweep)
          run_sweep_trials(cfg, SymBeta{d, cfg.beta_b}, csv);
        break;
      }
      case ExperimentKind::GaussianSweep: {
        for (const long d : cfg.sweep) run_sweep_trials(cfg, StdNormal{d}, csv);
        break;
      }
      case ExperimentKind::RosenbrockSweep: {
        for (const long v : cfg.sweep) {
          if (cfg.rosenbrock_variant == "hybrid") {
            HybridRosenbrock hr = cfg.hybrid;
            hr.n2 = v;
            run_sweep_trials(cfg, hr, csv);
          } else if (cfg.rosenbrock_variant == "even") {
            EvenRosenbrock er = cfg.even;
            er.d = v;
            run_sweep_trials(cfg, er, csv);
          } else {
            throw ConfigError("rosenbrock_variant must be hybrid or even");
          }
        }
        break;
      }
      case ExperimentKind::EntropyRate:
        run_rate(cfg, csv);
        break;
      case ExperimentKind::Oed:
        run_oed(cfg, csv);
        break;
    }
  } catch (const Error& e) {
    csv.out.flush();
    write_manifest("partial", e.what());
    throw;
  }

  write_manifest("complete", "");
  return {csv.rows, std::chrono::duration<double>(Clock::now() - t0).count()};
}

BenchmarkOutcome run_from_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open: " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest json: ") + e.what());
  }
  return run_benchmark(config_from_json(m.at("config")));
}

}  // namespace uent
