#include "magcal/experiments.hpp"

#include "magcal/ellipsoid_fit.hpp"
#include "magcal/ml_solver.hpp"
#include "magcal/nm_solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

namespace magcal {

namespace {

constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kSignStream = 1;

/// Runs body(i) for i in [0, count) on a small pool. Results must be written by index.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

MethodOutcome run_nm(const Dataset& data, const CalibrationParams& init, const CalibrationParams& truth,
                     const SolveOptions& opts) {
  MethodOutcome out;
  const auto fill = [&](const SolveReport& rep) {
    out.converged = rep.converged;
    out.iterations = rep.iterations;
    out.objective_history = rep.objective_history;
    out.final_objective = rep.objective_history.back();
  };
  try {
    const SolveReport rep = solve_nm(data, init, opts);
    fill(rep);
    out.metrics = error_metrics(rep.final_params, truth);
    out.solved = true;
  } catch (const NmSolveFailure& e) {
    fill(e.report());
    out.error = e.what();
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

MethodOutcome run_ml(const Dataset& data, const CalibrationParams& init, const CalibrationParams& truth,
                     const SolveOptions& opts) {
  MethodOutcome out;
  const auto fill = [&](const MLSolveReport& rep) {
    out.converged = rep.converged;
    out.iterations = rep.iterations;
    out.objective_history = rep.objective_history;
    out.final_objective = rep.objective_history.back();
    out.constraint_violation = rep.constraint_violation_history.back();
  };
  try {
    const MLSolveReport rep = solve_ml(data, initial_ml_state(init, data), opts);
    fill(rep);
    out.metrics = error_metrics(rep.final_state.params(), truth);
    out.solved = true;
  } catch (const MlSolveFailure& e) {
    fill(e.report());
    out.error = e.what();
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

MethodOutcome failed_outcome(const std::string& why) {
  MethodOutcome out;
  out.error = why;
  return out;
}

bool diverged(const MethodOutcome& o, double threshold) {
  return !o.solved || !std::isfinite(o.final_objective) || o.final_objective > threshold;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

CalibrationParams perturb_initial(const CalibrationParams& params, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0)) {
    throw InputError("perturbation fraction must be non-negative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto factor = [&] { return 1.0 + alpha * (gauss(rng) < 0 ? -1.0 : 1.0); };

  // a full 3x3 sign pattern is drawn, column-major; the lower entries scale zeros
  Mat3 r = params.shape.matrix();
  for (int col = 0; col < 3; ++col) {
    for (int row = 0; row < 3; ++row) r(row, col) *= factor();
  }
  CalibrationParams out;
  out.shape = UpperTriangular3::from_upper(r);
  for (int i = 0; i < 3; ++i) out.offset(i) = params.offset(i) * factor();
  return out;
}

MetricSummary summarize(const std::vector<MethodOutcome>& outcomes) {
  MetricSummary s;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> values;
  for (const auto& o : outcomes) {
    if (!o.solved) continue;
    values.emplace_back(o.metrics.scale_pct, o.metrics.ortho_deg, o.metrics.hard_iron_gauss);
    sum += values.back();
  }
  s.count = values.size();
  if (values.empty()) return s;
  const Eigen::Vector3d mean = sum / static_cast<double>(values.size());
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const auto& v : values) var += (v - mean).cwiseAbs2();
  if (values.size() > 1) var /= static_cast<double>(values.size() - 1);
  const Eigen::Vector3d sd = var.cwiseSqrt();
  s.mean = {mean(0), mean(1), mean(2)};
  s.stddev = {sd(0), sd(1), sd(2)};
  return s;
}

MonteCarloResult run_monte_carlo(const SimulationConfig& config, std::size_t runs, std::uint64_t seed,
                                 const ExperimentOptions& opts) {
  config.validate();
  opts.solve.validate();
  if (runs == 0) {
    throw InputError("Monte Carlo needs at least one run");
  }
  const Trajectory traj = config.trajectory();
  const CalibrationParams truth = config.truth.calibration();

  MonteCarloResult result;
  result.master_seed = seed;
  result.runs.resize(runs);

  parallel_for(runs, opts.workers, [&](std::size_t i) {
    MonteCarloRun& row = result.runs[i];
    row.run = i;
    row.noise_seed = derive_seed(seed, i, kNoiseStream);
    const Dataset data = simulate(config.truth, traj, row.noise_seed);
    try {
      const EllipsoidFit fit = fit_ellipsoid(data);
      row.min_eigenvalue = fit.min_eigenvalue;
      const CalibrationParams init = initial_params(fit.coeffs);
      row.nm = run_nm(data, init, truth, opts.solve);
      row.ml = run_ml(data, init, truth, opts.solve);
    } catch (const Error& e) {
      row.nm = failed_outcome(e.what());
      row.ml = failed_outcome(e.what());
    }
  });

  std::vector<MethodOutcome> nm, ml;
  for (const auto& r : result.runs) {
    nm.push_back(r.nm);
    ml.push_back(r.ml);
  }
  result.nm = summarize(nm);
  result.ml = summarize(ml);
  return result;
}

SensitivityResult run_sensitivity(const SimulationConfig& config, const std::vector<double>& alphas, std::size_t runs,
                                  double nm_threshold, double ml_threshold, std::uint64_t seed,
                                  const ExperimentOptions& opts) {
  config.validate();
  opts.solve.validate();
  if (!(nm_threshold > 0) || !(ml_threshold > 0)) {
    throw InputError("divergence thresholds must be positive");
  }
  if (runs == 0 || alphas.empty()) {
    throw InputError("sensitivity sweep needs at least one alpha and one run");
  }
  for (double a : alphas) {
    if (!(a >= 0) || !std::isfinite(a)) throw InputError("perturbation fractions must be finite and non-negative");
  }

  const Trajectory traj = config.trajectory();
  const CalibrationParams truth = config.truth.calibration();

  SensitivityResult result;
  result.alphas = alphas;
  result.runs = runs;
  result.nm_threshold = nm_threshold;
  result.ml_threshold = ml_threshold;
  result.master_seed = seed;
  result.rows.resize(alphas.size() * runs);

  // run r sees the same noise and sign pattern at every alpha; only the magnitude changes
  parallel_for(result.rows.size(), opts.workers, [&](std::size_t idx) {
    SensitivityRow& row = result.rows[idx];
    row.alpha_index = idx / runs;
    row.run = idx % runs;
    row.alpha = alphas[row.alpha_index];
    const Dataset data = simulate(config.truth, traj, derive_seed(seed, row.run, kNoiseStream));
    try {
      const CalibrationParams fitted = initial_params(fit_ellipsoid(data).coeffs);
      const CalibrationParams init = perturb_initial(fitted, row.alpha, derive_seed(seed, row.run, kSignStream));
      row.nm = run_nm(data, init, truth, opts.solve);
      row.ml = run_ml(data, init, truth, opts.solve);
    } catch (const Error& e) {
      row.nm = failed_outcome(e.what());
      row.ml = failed_outcome(e.what());
    }
    row.nm_diverged = diverged(row.nm, nm_threshold);
    row.ml_diverged = diverged(row.ml, ml_threshold);
  });

  result.nm_divergences.assign(alphas.size(), 0);
  result.ml_divergences.assign(alphas.size(), 0);
  for (const auto& row : result.rows) {
    result.nm_divergences[row.alpha_index] += row.nm_diverged ? 1 : 0;
    result.ml_divergences[row.alpha_index] += row.ml_diverged ? 1 : 0;
  }
  return result;
}

std::vector<TimingRow> run_timing(const SimulationConfig& config, const std::vector<std::size_t>& n_values,
                                  const TimingOptions& opts) {
  config.validate();
  opts.solve.validate();
  if (n_values.empty()) {
    throw InputError("timing needs at least one N");
  }
  if (opts.repeats == 0) {
    throw InputError("timing needs at least one repeat");
  }
  using clock = std::chrono::steady_clock;

  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  };
  // one warm-up call, then the median of the timed repeats
  const auto time_it = [&](const std::function<int()>& fn, int& iterations) {
    iterations = fn();
    std::vector<double> secs;
    for (std::size_t r = 0; r < opts.repeats; ++r) {
      const auto t0 = clock::now();
      iterations = fn();
      secs.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    return median(secs);
  };

  std::vector<TimingRow> rows;
  for (const std::size_t n : n_values) {
    SimulationConfig cfg = config;
    cfg.n = n;
    cfg.validate();
    const Dataset data = simulate(cfg.truth, cfg.trajectory(), cfg.seed);
    const CalibrationParams init = initial_params(fit_ellipsoid(data).coeffs);
    const MLState ml_init = initial_ml_state(init, data);

    TimingRow nm_row{n, "nm"};
    nm_row.median_seconds = time_it([&] { return solve_nm(data, init, opts.solve).iterations; }, nm_row.iterations);
    rows.push_back(nm_row);

    TimingRow ml_row{n, "ml"};
    ml_row.median_seconds =
        time_it([&] { return solve_ml(data, ml_init, opts.solve).iterations; }, ml_row.iterations);
    rows.push_back(ml_row);

    if (opts.dense_step_max_n > 0 && n <= opts.dense_step_max_n) {
      const KktSystem kkt = ml_kkt_system(ml_init, data);
      TimingRow dense_row{n, "ml_dense_step"};
      dense_row.median_seconds = time_it(
          [&] {
            ml_dense_newton_step(kkt);
            return 1;
          },
          dense_row.iterations);
      rows.push_back(dense_row);
    }
  }
  for (auto& row : rows) {
    row.median_seconds_per_iteration = row.median_seconds / std::max(1, row.iterations);
  }
  return rows;
}

}  // namespace magcal
