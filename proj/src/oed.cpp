#include "uent/oed.hpp"

#include "uent/parallel.hpp"
#include "uent/special.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace uent {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct LvState {
  double x, y;
};

LvState lv_deriv(double a, double b, LvState s) {
  return {a * s.x - s.x * s.y, b * s.x * s.y - s.y};
}

void check_lv(const LvConfig& lv) {
  if (!(lv.a_lo <= lv.a_hi) || !(lv.b_lo <= lv.b_hi))
    throw ConfigError("LvConfig: prior bounds out of order");
  if (!(lv.x0 > 0.0 && lv.y0 > 0.0))
    throw ConfigError("LvConfig: initial populations must be positive");
  if (!(lv.dt > 0.0) || !(lv.t_end > 0.0))
    throw ConfigError("LvConfig: dt and t_end must be positive");
  if (!(lv.noise_variance > 0.0))
    throw ConfigError("LvConfig: noise variance must be positive");
}

}  // namespace

std::pair<Vector, Vector> lv_integrate(double a, double b, const LvConfig& lv,
                                       const std::vector<double>& query_times) {
  check_lv(lv);
  for (const double t : query_times)
    if (!(t >= 0.0 && t <= lv.t_end))
      throw ConfigError("lv_integrate: query time outside [0, t_end]");

  std::vector<long> order(query_times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](long i, long j) { return query_times[i] < query_times[j]; });

  Vector xs(query_times.size()), ys(query_times.size());
  std::size_t qpos = 0;
  const auto record_in = [&](double t0, double h, LvState s0, LvState d0,
                             LvState s1, LvState d1) {
    while (qpos < order.size() && query_times[order[qpos]] <= t0 + h) {
      const double th = (query_times[order[qpos]] - t0) / h;
      const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
      const double h10 = th * (1.0 - th) * (1.0 - th);
      const double h01 = th * th * (3.0 - 2.0 * th);
      const double h11 = th * th * (th - 1.0);
      xs[order[qpos]] = h00 * s0.x + h10 * h * d0.x + h01 * s1.x + h11 * h * d1.x;
      ys[order[qpos]] = h00 * s0.y + h10 * h * d0.y + h01 * s1.y + h11 * h * d1.y;
      ++qpos;
    }
  };

  LvState s{lv.x0, lv.y0};
  double t = 0.0;
  // queries exactly at t = 0
  while (qpos < order.size() && query_times[order[qpos]] <= 0.0) {
    xs[order[qpos]] = s.x;
    ys[order[qpos]] = s.y;
    ++qpos;
  }
  const long steps = static_cast<long>(std::ceil(lv.t_end / lv.dt - 1e-9));
  for (long step = 0; step < steps; ++step) {
    const double h = std::min(lv.dt, lv.t_end - t);
    const LvState k1 = lv_deriv(a, b, s);
    const LvState k2 = lv_deriv(a, b, {s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y});
    const LvState k3 = lv_deriv(a, b, {s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y});
    const LvState k4 = lv_deriv(a, b, {s.x + h * k3.x, s.y + h * k3.y});
    const LvState next{s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                       s.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y)};
    if (!std::isfinite(next.x) || !std::isfinite(next.y))
      throw NonFinite("lv_integrate: state overflow");
    record_in(t, h, s, k1, next, lv_deriv(a, b, next));
    s = next;
    t += h;
  }
  // guard against ties at t_end missed by rounding
  while (qpos < order.size()) {
    xs[order[qpos]] = s.x;
    ys[order[qpos]] = s.y;
    ++qpos;
  }
  return {std::move(xs), std::move(ys)};
}

DesignSchedule beta_schedule(double alpha, double beta, int d, double t_end) {
  if (!(alpha > 0.0 && beta > 0.0)) throw DomainError("beta_schedule: alpha, beta > 0");
  if (d < 1) throw ConfigError("beta_schedule: d >= 1 required");
  DesignSchedule s;
  s.alpha = alpha;
  s.beta = beta;
  s.times.resize(d);
  for (int i = 1; i <= d; ++i)
    s.times[i - 1] =
        t_end * reg_inc_beta_inv(alpha, beta, static_cast<double>(i) / (d + 1));
  return s;
}

SampleSet sample_design_data(const DesignSchedule& schedule, const LvConfig& lv,
                             long n, std::uint64_t seed) {
  check_lv(lv);
  if (n < 1) throw ConfigError("sample_design_data: n >= 1 required");
  const long d = static_cast<long>(schedule.times.size());
  if (d < 1) throw ConfigError("sample_design_data: empty schedule");
  const double sd = std::sqrt(lv.noise_variance);
  Matrix m(n, 2 * d);
  const RngStream root(seed);
  parallel_for(0, n, [&](long i) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(i));
    const double a = rng.uniform(lv.a_lo, lv.a_hi);
    const double b = rng.uniform(lv.b_lo, lv.b_hi);
    const auto [xs, ys] = lv_integrate(a, b, lv, schedule.times);
    for (long t = 0; t < d; ++t) {
      m(i, 2 * t) = xs[t] + sd * rng.normal();
      m(i, 2 * t + 1) = ys[t] + sd * rng.normal();
    }
  });
  return SampleSet(std::move(m));
}

std::vector<std::pair<double, double>> default_design_grid() {
  std::vector<double> axis(8);
  for (int i = 0; i < 8; ++i)
    axis[i] = 0.3 * std::pow(5.0 / 0.3, static_cast<double>(i) / 7.0);
  std::vector<std::pair<double, double>> grid;
  grid.reserve(64);
  for (const double a : axis)
    for (const double b : axis) grid.emplace_back(a, b);
  return grid;
}

MesResult mes_search(const std::vector<std::pair<double, double>>& grid,
                     const LvConfig& lv, long n, const DesignEstimator& estimator,
                     std::uint64_t seed, int schedule_d) {
  if (grid.empty()) throw ConfigError("mes_search: empty grid");
  MesResult res;
  res.table.reserve(grid.size());
  bool have_best = false;
  double best_utility = 0.0;
  for (const auto& [alpha, beta] : grid) {
    const DesignSchedule sched = beta_schedule(alpha, beta, schedule_d, lv.t_end);
    // common random numbers: every grid point sees the same seed
    const SampleSet data = sample_design_data(sched, lv, n, seed);
    UtilityRow row;
    row.alpha = alpha;
    row.beta = beta;
    row.utility = estimator(data, &row.std_err);
    res.table.push_back(row);
    const bool better =
        !have_best || row.utility > best_utility ||
        (row.utility == best_utility &&
         std::make_pair(alpha, beta) < std::make_pair(res.best.alpha, res.best.beta));
    if (better) {
      res.best = sched;
      best_utility = row.utility;
      have_best = true;
    }
  }
  return res;
}

GaussianSimModel lv_model(const DesignSchedule& schedule, const LvConfig& lv) {
  check_lv(lv);
  if (schedule.times.empty()) throw ConfigError("lv_model: empty schedule");
  GaussianSimModel m;
  m.noise_sd = std::sqrt(lv.noise_variance);
  m.response_dim = 2 * static_cast<long>(schedule.times.size());
  m.sample_prior = [lv](RngStream& rng) {
    Vector th(2);
    th[0] = rng.uniform(lv.a_lo, lv.a_hi);
    th[1] = rng.uniform(lv.b_lo, lv.b_hi);
    return th;
  };
  m.forward = [schedule, lv](const Vector& th) {
    const auto [xs, ys] = lv_integrate(th[0], th[1], lv, schedule.times);
    Vector out(2 * xs.size());
    for (long t = 0; t < xs.size(); ++t) {
      out[2 * t] = xs[t];
      out[2 * t + 1] = ys[t];
    }
    return out;
  };
  return m;
}

GaussianSimModel point_mass_model(const DesignSchedule& schedule, const LvConfig& lv,
                                  double a0, double b0) {
  GaussianSimModel m = lv_model(schedule, lv);
  m.sample_prior = [a0, b0](RngStream&) {
    Vector th(2);
    th[0] = a0;
    th[1] = b0;
    return th;
  };
  return m;
}

GaussianSimModel conjugate_toy_model() {
  GaussianSimModel m;
  m.noise_sd = 1.0;
  m.response_dim = 1;
  m.sample_prior = [](RngStream& rng) {
    Vector th(1);
    th[0] = rng.normal();
    return th;
  };
  m.forward = [](const Vector& th) { return th; };
  return m;
}

double nmc_entropy(const GaussianSimModel& model, const NmcConfig& cfg) {
  if (cfg.m_outer < 1 || cfg.n_inner < 1)
    throw ConfigError("nmc_entropy: M, N_inner >= 1 required");
  if (!model.sample_prior || !model.forward || model.response_dim < 1 ||
      !(model.noise_sd > 0.0))
    throw ConfigError("nmc_entropy: incomplete model");

  const long M = cfg.m_outer, N = cfg.n_inner, D = model.response_dim;
  const RngStream root(cfg.seed);

  // shared inner sample: draw sequentially, simulate in parallel
  RngStream inner_rng = root.substream(1);
  std::vector<Vector> thetas(N);
  for (long j = 0; j < N; ++j) thetas[j] = model.sample_prior(inner_rng);
  Matrix means(N, D);
  parallel_for(0, N, [&](long j) { means.row(j) = model.forward(thetas[j]).transpose(); });

  const double inv_var = 1.0 / (model.noise_sd * model.noise_sd);
  const double ll_const =
      -0.5 * D * kLog2Pi - D * std::log(model.noise_sd);

  RngStream outer_rng = root.substream(2);
  Matrix ys(M, D);
  for (long i = 0; i < M; ++i) {
    const Vector th = model.sample_prior(outer_rng);
    const Vector mean = model.forward(th);
    for (long c = 0; c < D; ++c)
      ys(i, c) = mean[c] + model.noise_sd * outer_rng.normal();
  }

  Vector outer_terms(M);
  parallel_for(0, M, [&](long i) {
    Vector ll(N);
    for (long j = 0; j < N; ++j)
      ll[j] = ll_const - 0.5 * inv_var * (ys.row(i) - means.row(j)).squaredNorm();
    const double mx = ll.maxCoeff();
    double s = 0.0;
    for (long j = 0; j < N; ++j) s += std::exp(ll[j] - mx);
    outer_terms[i] = mx + std::log(s) - std::log(static_cast<double>(N));
  });

  double sum = 0.0;
  for (long i = 0; i < M; ++i) sum += outer_terms[i];
  return -sum / static_cast<double>(M);
}

double nmc_entropy(const DesignSchedule& schedule, const LvConfig& lv,
                   const NmcConfig& cfg) {
  return nmc_entropy(lv_model(schedule, lv), cfg);
}

void save_utility_csv(const std::string& path, const std::vector<UtilityRow>& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out << "alpha,beta,utility,stderr\n";
  for (const auto& row : table)
    out << format_double(row.alpha) << "," << format_double(row.beta) << ","
        << format_double(row.utility) << "," << format_double(row.std_err) << "\n";
}

void save_schedule_json(const std::string& path, const DesignSchedule& schedule) {
  nlohmann::json doc;
  doc["alpha"] = schedule.alpha;
  doc["beta"] = schedule.beta;
  doc["times"] = schedule.times;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace uent
