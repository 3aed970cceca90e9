#include "magcal/experiments.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace magcal;

TEST_CASE("perturb_initial examples") {
  const CalibrationParams p{UpperTriangular3({2, 2, 2, 2, 2, 2}), Vec3(2, 2, 2)};
  const CalibrationParams same = perturb_initial(p, 0.0, 9);
  CHECK(same.shape == p.shape);
  CHECK(same.offset == p.offset);

  const CalibrationParams q = perturb_initial(p, 0.05, 9);
  for (double v : q.shape.entries()) CHECK((v == doctest::Approx(2.1) || v == doctest::Approx(1.9)));
  for (int i = 0; i < 3; ++i) CHECK((q.offset(i) == doctest::Approx(2.1) || q.offset(i) == doctest::Approx(1.9)));
  CHECK(q.shape.matrix()(1, 0) == 0.0);

  CHECK_THROWS_AS(perturb_initial(p, -0.1, 9), InputError);
}

TEST_CASE("perturbation signs are balanced and reproducible") {
  const CalibrationParams p{UpperTriangular3({1, 1, 1, 1, 1, 1}), Vec3(1, 1, 1)};
  int up = 0, total = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const CalibrationParams q = perturb_initial(p, 0.5, s);
    CHECK(q.shape.has_positive_diagonal());
    for (double v : q.shape.entries()) up += v > 1, ++total;
    CHECK(perturb_initial(p, 0.5, s).shape == q.shape);
  }
  CHECK(std::abs(static_cast<double>(up) / total - 0.5) < 0.03);
}

TEST_CASE("derive_seed separates runs and streams") {
  CHECK(derive_seed(1, 0, 0) == derive_seed(1, 0, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 1, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
}

TEST_CASE("noise-free Monte Carlo recovers the truth") {
  SimulationConfig cfg = SimulationConfig::reference_scenario();
  cfg.truth.noise_sigma = 0;
  const MonteCarloResult r = run_monte_carlo(cfg, 1, 3);
  REQUIRE(r.runs.size() == 1);
  for (const MethodOutcome* o : {&r.runs[0].nm, &r.runs[0].ml}) {
    CHECK(o->solved);
    CHECK(o->metrics.scale_pct <= 1e-4);
    CHECK(o->metrics.ortho_deg <= 1e-4);
    CHECK(o->metrics.hard_iron_gauss <= 1e-4);
  }
}

TEST_CASE("Monte Carlo is deterministic and independent of worker count") {
  const SimulationConfig cfg = SimulationConfig::reference_scenario();
  const MonteCarloResult a = run_monte_carlo(cfg, 6, 77, {{}, 1});
  const MonteCarloResult b = run_monte_carlo(cfg, 6, 77, {{}, 3});
  REQUIRE(a.runs.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.runs[i].noise_seed == b.runs[i].noise_seed);
    CHECK(a.runs[i].nm.objective_history == b.runs[i].nm.objective_history);
    CHECK(a.runs[i].ml.objective_history == b.runs[i].ml.objective_history);
    CHECK(a.runs[i].ml.metrics.scale_pct == b.runs[i].ml.metrics.scale_pct);
  }
  CHECK(a.nm.mean.scale_pct == b.nm.mean.scale_pct);
}

TEST_CASE("summary is recomputable from the rows") {
  const MonteCarloResult r = run_monte_carlo(SimulationConfig::reference_scenario(), 8, 5);
  std::vector<MethodOutcome> nm;
  for (const auto& run : r.runs) nm.push_back(run.nm);
  const MetricSummary s = summarize(nm);
  CHECK(s.count == 8);
  double mean = 0;
  for (const auto& o : nm) mean += o.metrics.scale_pct;
  mean /= 8;
  double var = 0;
  for (const auto& o : nm) var += std::pow(o.metrics.scale_pct - mean, 2);
  CHECK(s.mean.scale_pct == doctest::Approx(mean).epsilon(1e-14));
  CHECK(s.stddev.scale_pct == doctest::Approx(std::sqrt(var / 7)).epsilon(1e-12));
  CHECK(r.nm.mean.scale_pct == s.mean.scale_pct);
}

TEST_CASE("unperturbed sensitivity run never diverges") {
  const SensitivityResult r = run_sensitivity(SimulationConfig::reference_scenario(), {0.0}, 10, kDefaultNmThreshold,
                                              kDefaultMlThreshold, 2016);
  REQUIRE(r.nm_divergences.size() == 1);
  CHECK(r.nm_divergences[0] == 0);
  CHECK(r.ml_divergences[0] == 0);
  CHECK(r.rows.size() == 10);
}

TEST_CASE("sensitivity counts stay in range and repeat exactly") {
  const SimulationConfig cfg = SimulationConfig::reference_scenario();
  const SensitivityResult a = run_sensitivity(cfg, {0.02, 0.06}, 8, 0.018, 0.004, 11, {{}, 2});
  const SensitivityResult b = run_sensitivity(cfg, {0.02, 0.06}, 8, 0.018, 0.004, 11, {{}, 1});
  CHECK(a.nm_divergences == b.nm_divergences);
  CHECK(a.ml_divergences == b.ml_divergences);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.nm_divergences[i] >= 0);
    CHECK(a.nm_divergences[i] <= 8);
    CHECK(a.ml_divergences[i] <= a.nm_divergences[i]);
  }
  CHECK_THROWS_AS(run_sensitivity(cfg, {0.02}, 2, 0.0, 0.004, 1), InputError);
}

TEST_CASE("timing table shape") {
  SimulationConfig cfg = SimulationConfig::reference_scenario();
  TimingOptions o;
  o.repeats = 1;
  o.dense_step_max_n = 50;
  const std::vector<TimingRow> rows = run_timing(cfg, {30, 60}, o);
  int dense = 0;
  for (const auto& r : rows) {
    CHECK(r.median_seconds >= 0);
    dense += r.method == "ml_dense_step";
  }
  CHECK(dense == 1);
  CHECK(rows.size() == 5);
  CHECK_THROWS_AS(run_timing(cfg, {}, o), InputError);
}
