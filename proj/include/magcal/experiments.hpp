#pragma once

#include "magcal/metrics.hpp"
#include "magcal/simulator.hpp"
#include "magcal/solve.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace magcal {

/// Multiplies every free entry of R and every entry of h by (1 +/- alpha), signs drawn from seed.
CalibrationParams perturb_initial(const CalibrationParams& params, double alpha, std::uint64_t seed);

/// Child seed for (master, run, stream); independent of scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream);

struct ExperimentOptions {
  SolveOptions solve;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
};

/// Outcome of one solver on one dataset.
struct MethodOutcome {
  bool solved = false;  ///< false when the solver (or the initializer) threw
  bool converged = false;
  int iterations = 0;
  double final_objective = 0;  ///< NM objective, or ML misfit
  double constraint_violation = 0;  ///< ML only
  ErrorMetrics metrics;
  std::vector<double> objective_history;
  std::string error;
};

struct MonteCarloRun {
  std::size_t run = 0;
  std::uint64_t noise_seed = 0;
  double min_eigenvalue = 0;
  MethodOutcome nm;
  MethodOutcome ml;
};

struct MetricSummary {
  std::size_t count = 0;
  ErrorMetrics mean;
  ErrorMetrics stddev;  ///< sample standard deviation (n - 1)
};

/// Mean and sample deviation over the solved runs of one method.
MetricSummary summarize(const std::vector<MethodOutcome>& outcomes);

struct MonteCarloResult {
  std::uint64_t master_seed = 0;
  std::vector<MonteCarloRun> runs;
  MetricSummary nm;
  MetricSummary ml;
};

/// Fixed truth and trajectory, fresh noise per run; both estimators from the ellipsoid-fit start.
MonteCarloResult run_monte_carlo(const SimulationConfig& config, std::size_t runs, std::uint64_t seed,
                                 const ExperimentOptions& opts = {});

struct SensitivityRow {
  std::size_t alpha_index = 0;
  double alpha = 0;
  std::size_t run = 0;
  MethodOutcome nm;
  MethodOutcome ml;
  bool nm_diverged = false;
  bool ml_diverged = false;
};

struct SensitivityResult {
  std::vector<double> alphas;
  std::size_t runs = 0;
  double nm_threshold = 0;
  double ml_threshold = 0;
  std::uint64_t master_seed = 0;
  std::vector<int> nm_divergences;  ///< per alpha, out of runs
  std::vector<int> ml_divergences;
  std::vector<SensitivityRow> rows;
};

/// Reference thresholds on the final objective: 0.018 (NM) and 0.004 (ML).
/// They scale with N and sigma and only fit the reference scenario.
inline constexpr double kDefaultNmThreshold = 0.018;
inline constexpr double kDefaultMlThreshold = 0.004;

SensitivityResult run_sensitivity(const SimulationConfig& config, const std::vector<double>& alphas, std::size_t runs,
                                  double nm_threshold, double ml_threshold, std::uint64_t seed,
                                  const ExperimentOptions& opts = {});

struct TimingRow {
  std::size_t n = 0;
  std::string method;  ///< "nm", "ml" or "ml_dense_step"
  double median_seconds = 0;
  double median_seconds_per_iteration = 0;
  int iterations = 0;
};

struct TimingOptions {
  std::size_t repeats = 5;
  /// Also time one dense (4N+9) Newton step for N up to this bound; 0 disables.
  std::size_t dense_step_max_n = 0;
  SolveOptions solve;
};

/// Median wall-clock times after one warm-up, per (N, method).
std::vector<TimingRow> run_timing(const SimulationConfig& config, const std::vector<std::size_t>& n_values,
                                  const TimingOptions& opts = {});

}  // namespace magcal
