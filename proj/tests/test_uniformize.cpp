#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "uent/distributions.hpp"
#include "uent/uniformize.hpp"

#include <cmath>

using namespace uent;

namespace {

FlowModel identity_flow(long d) {
  RngStream rng(0);
  return make_flow(d, 1, 8, rng);
}

}  // namespace

TEST_CASE("probability transform of a simple point set") {
  const std::vector<std::vector<double>> pts = {{-1.0}, {0.0}, {1.0}};
  const SampleSet s(pts);
  const UniformizedSet u = uniformize(identity_flow(1), s);
  CHECK(u.z(0, 0) == doctest::Approx(0.15865525393145707).epsilon(1e-15));
  CHECK(u.z(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(u.z(2, 0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  // Identity map: correction_i = -log phi(x_i).
  CHECK(u.corrections(0) == doctest::Approx(1.4189385332046727).epsilon(1e-15));
  CHECK(u.corrections(1) == doctest::Approx(0.9189385332046727).epsilon(1e-15));
  CHECK(u.corrections(2) == doctest::Approx(1.4189385332046727).epsilon(1e-15));
}

TEST_CASE("frozen pipeline on the worked point set") {
  const std::vector<std::vector<double>> pts = {{-1.0}, {0.0}, {1.0}};
  const SampleSet s(pts);
  UmConfig cfg;
  cfg.base_estimator = EstimatorKind::tKL;
  cfg.k = 1;
  const EstimateReport r = um_estimate_frozen(s, identity_flow(1), cfg);
  CHECK(r.estimator == "UM-tKL");
  CHECK(r.n_used == 3);
  CHECK(r.d == 1);
  CHECK(r.value == doctest::Approx(2.1629353640640003).epsilon(1e-12));
  CHECK(r.base_value.value() == doctest::Approx(0.9106634975259945).epsilon(1e-12));
  CHECK(r.correction.value() == doctest::Approx(1.252271866538006).epsilon(1e-12));
  CHECK(r.value == r.base_value.value() + r.correction.value());  // exact
  CHECK(r.std_err.has_value());
}

TEST_CASE("flow-only estimate is the mean correction") {
  const std::vector<std::vector<double>> pts = {{-1.0}, {0.0}, {1.0}};
  const SampleSet s(pts);
  UmConfig cfg;
  const EstimateReport r = nf_only_estimate_frozen(s, identity_flow(1), cfg);
  CHECK(r.estimator == "NF");
  CHECK(r.value == doctest::Approx(1.252271866538006).epsilon(1e-12));
  CHECK(r.value == r.correction.value());
  CHECK(!r.base_value.has_value());
}

TEST_CASE("dimension mismatch is rejected") {
  const std::vector<std::vector<double>> pts = {{-1.0}, {0.0}, {1.0}};
  const SampleSet s(pts);
  CHECK_THROWS_AS(uniformize(identity_flow(2), s), ConfigError);
}

TEST_CASE("rescaling data and flow together shifts only the correction") {
  // g(x) = x / 4 on 4x-scaled data reproduces the identity-flow transform
  // bit for bit (power-of-two scale), and entropy picks up exactly log 4 per
  // dimension through the correction term.
  const std::vector<std::vector<double>> pts = {{-1.0}, {0.0}, {1.0}};
  const std::vector<std::vector<double>> pts4 = {{-4.0}, {0.0}, {4.0}};
  const SampleSet s(pts), s4(pts4);
  const FlowModel ident = identity_flow(1);
  FlowModel scaled = identity_flow(1);
  scaled.in_scale(0) = 4.0;
  const UniformizedSet a = uniformize(ident, s);
  const UniformizedSet b = uniformize(scaled, s4);
  CHECK((a.z.array() == b.z.array()).all());
  for (int i = 0; i < 3; ++i)
    CHECK(b.corrections(i) ==
          doctest::Approx(a.corrections(i) + std::log(4.0)).epsilon(1e-15));
  UmConfig cfg;
  cfg.base_estimator = EstimatorKind::tKL;
  const EstimateReport ra = um_estimate_frozen(s, ident, cfg);
  const EstimateReport rb = um_estimate_frozen(s4, scaled, cfg);
  CHECK(rb.base_value.value() == ra.base_value.value());  // same z, bitwise
  CHECK(rb.value == doctest::Approx(ra.value + std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("trained pipeline is seed-reproducible") {
  const SampleSet s = sample(StdNormal{2}, 400, 808);
  UmConfig cfg;
  cfg.k = 1;
  cfg.seed = 31;
  cfg.flow.n_layers = 1;
  cfg.flow.hidden_width = 8;
  cfg.flow.epochs = 5;
  cfg.flow.patience = 5;
  const EstimateReport r1 = um_estimate(s, cfg);
  const EstimateReport r2 = um_estimate(s, cfg);
  CHECK(r1.value == r2.value);
  CHECK(r1.base_value.value() == r2.base_value.value());
  CHECK(r1.correction.value() == r2.correction.value());
  cfg.seed = 32;
  const EstimateReport r3 = um_estimate(s, cfg);
  CHECK(r3.value != r1.value);  // different split and flow init
  // Loose sanity band around the true entropy log(2 pi e).
  CHECK(r1.value == doctest::Approx(2.8378770664093453).epsilon(0.2));
}

TEST_CASE("reuse flag controls the estimation set") {
  const SampleSet s = sample(StdNormal{2}, 400, 809);
  UmConfig cfg;
  cfg.seed = 5;
  cfg.flow.n_layers = 1;
  cfg.flow.hidden_width = 8;
  cfg.flow.epochs = 3;
  cfg.flow.patience = 3;
  const EstimateReport held_out = um_estimate(s, cfg);
  CHECK(held_out.n_used == 200);
  cfg.reuse_train_for_estimate = true;
  const EstimateReport all_points = um_estimate(s, cfg);
  CHECK(all_points.n_used == 400);
}

TEST_CASE("configuration errors") {
  const SampleSet tiny = sample(StdNormal{1}, 3, 1);
  UmConfig cfg;
  CHECK_THROWS_AS(um_estimate(tiny, cfg), TooFewSamples);
  const SampleSet s = sample(StdNormal{1}, 50, 2);
  UmConfig bad_split = cfg;
  bad_split.split_fraction = 1.0;
  CHECK_THROWS_AS(um_estimate(s, bad_split), ConfigError);
  UmConfig bad_base = cfg;
  bad_base.base_estimator = EstimatorKind::KL;
  CHECK_THROWS_AS(um_estimate(s, bad_base), ConfigError);
  UmConfig bad_k = cfg;
  bad_k.k = 0;
  CHECK_THROWS_AS(um_estimate(s, bad_k), InvalidK);
}
