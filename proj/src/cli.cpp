#include "magcal/cli.hpp"

#include "magcal/dataset_io.hpp"
#include "magcal/ellipsoid_fit.hpp"
#include "magcal/experiments.hpp"
#include "magcal/metrics.hpp"
#include "magcal/ml_solver.hpp"
#include "magcal/nm_solver.hpp"
#include "magcal/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace magcal::cli {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

SimulationConfig config_or_defaults(const std::filesystem::path& path) {
  return path.empty() ? SimulationConfig::reference_scenario() : load_simulation_config(path);
}

/// Maps library errors onto the exit-code contract.
int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InsufficientDataError& e) {
    log << "error: " << e.what() << "\n";
    return kDegenerateData;
  } catch (const DegenerateExcitationError& e) {
    log << "error: " << e.what() << "\n";
    return kDegenerateData;
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DecompositionError& e) {
    log << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json summary_json(const MetricSummary& s, const std::vector<MethodOutcome>& outcomes) {
  std::array<std::vector<double>, 3> cols;
  for (const auto& o : outcomes) {
    if (!o.solved) continue;
    cols[0].push_back(o.metrics.scale_pct);
    cols[1].push_back(o.metrics.ortho_deg);
    cols[2].push_back(o.metrics.hard_iron_gauss);
  }
  static constexpr const char* kNames[3] = {"e_s_pct", "e_o_deg", "e_h_gauss"};
  const double means[3] = {s.mean.scale_pct, s.mean.ortho_deg, s.mean.hard_iron_gauss};
  const double sds[3] = {s.stddev.scale_pct, s.stddev.ortho_deg, s.stddev.hard_iron_gauss};
  json j;
  j["solved_runs"] = s.count;
  for (int m = 0; m < 3; ++m) {
    j[kNames[m]] = {{"mean", means[m]},
                    {"stddev", sds[m]},
                    {"q1", quantile(cols[m], 0.25)},
                    {"median", quantile(cols[m], 0.5)},
                    {"q3", quantile(cols[m], 0.75)}};
  }
  return j;
}

void write_outcome_row(std::ostream& out, const MethodOutcome& o) {
  out << (o.solved ? 1 : 0) << ',' << (o.converged ? 1 : 0) << ',' << o.iterations << ',' << fmt(o.final_objective)
      << ',' << fmt(o.metrics.scale_pct) << ',' << fmt(o.metrics.ortho_deg) << ','
      << fmt(o.metrics.hard_iron_gauss);
}

CalibrationReportFile nm_report(const SolveReport& rep) {
  CalibrationReportFile f;
  f.method = "nm";
  f.shape = rep.final_params.shape;
  f.offset = rep.final_params.offset;
  f.objective_history = rep.objective_history;
  f.iterations = rep.iterations;
  f.converged = rep.converged;
  return f;
}

CalibrationReportFile ml_report(const MLSolveReport& rep) {
  CalibrationReportFile f;
  f.method = "ml";
  f.t_matrix = rep.final_state.t_matrix;
  try {
    f.shape = rep.final_state.t_matrix.inverse();
  } catch (const DecompositionError&) {
    f.shape = UpperTriangular3::identity();
    f.warnings.push_back("T is singular; shape left at identity");
  }
  f.offset = rep.final_state.offset;
  f.objective_history = rep.objective_history;
  f.constraint_violation_history = rep.constraint_violation_history;
  f.iterations = rep.iterations;
  f.converged = rep.converged;
  f.warnings.insert(f.warnings.end(), rep.warnings.begin(), rep.warnings.end());
  return f;
}

}  // namespace

std::filesystem::path truth_sidecar_path(const std::filesystem::path& dataset) {
  std::filesystem::path p = dataset;
  return p.replace_extension(".truth.json");
}

std::filesystem::path method_report_path(const std::filesystem::path& out, const std::string& method) {
  std::filesystem::path p = out;
  return p.replace_extension("." + method + ".json");
}

int cmd_simulate(const SimulateArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    SimulationConfig cfg = config_or_defaults(args.config);
    if (args.seed) cfg.seed = *args.seed;
    cfg.validate();
    const Dataset data = simulate(cfg.truth, cfg.trajectory(), cfg.seed);
    write_dataset_csv(args.out, data.samples);

    CalibrationReportFile truth;
    truth.method = "truth";
    const CalibrationParams p = cfg.truth.calibration();
    truth.shape = p.shape;
    truth.t_matrix = p.shape.inverse();
    truth.offset = p.offset;
    truth.converged = true;
    truth.input_digest = file_digest(args.out);
    truth.save(truth_sidecar_path(args.out));
    log << "wrote " << data.size() << " samples to " << args.out.string() << "\n";
    return int{kOk};
  });
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& log) {
  return guarded(log, [&]() -> int {
    if (args.method != "nm" && args.method != "ml" && args.method != "both") {
      throw InputError("method must be nm, ml or both");
    }
    args.solve.validate();
    CsvReadResult csv = read_dataset_csv(args.input);
    for (const auto& w : csv.warnings) log << "warning: " << w << "\n";
    const Dataset& data = csv.data;
    const std::string digest = file_digest(args.input);

    const EllipsoidFit fit = fit_ellipsoid(data, FitOptions{args.center});
    const CalibrationParams init = initial_params(fit.coeffs);

    int code = kOk;
    std::optional<CalibrationReportFile> nm_file, ml_file;
    const auto finish = [&](CalibrationReportFile f) {
      f.min_eigenvalue = fit.min_eigenvalue;
      f.input_digest = digest;
      f.warnings.insert(f.warnings.begin(), csv.warnings.begin(), csv.warnings.end());
      return f;
    };

    if (args.method != "ml") {
      try {
        nm_file = finish(nm_report(solve_nm(data, init, args.solve)));
      } catch (const NmSolveFailure& e) {
        log << "error: NM solver failed: " << e.what() << "\n";
        nm_file = finish(nm_report(e.report()));
        nm_file->warnings.push_back(std::string("solver failure: ") + e.what());
        code = kSolverFailure;
      }
    }
    if (args.method != "nm") {
      try {
        ml_file = finish(ml_report(solve_ml(data, initial_ml_state(init, data), args.solve)));
      } catch (const MlSolveFailure& e) {
        log << "error: ML solver failed: " << e.what() << "\n";
        ml_file = finish(ml_report(e.report()));
        ml_file->warnings.push_back(std::string("solver failure: ") + e.what());
        code = kSolverFailure;
      }
    }

    if (args.method != "both") {
      (nm_file ? *nm_file : *ml_file).save(args.out);
      return code;
    }

    nm_file->save(method_report_path(args.out, "nm"));
    ml_file->save(method_report_path(args.out, "ml"));

    double max_diff = 0;
    for (int i = 0; i < 6; ++i) {
      max_diff = std::max(max_diff, std::abs(nm_file->shape.entries()[i] - ml_file->shape.entries()[i]));
    }
    max_diff = std::max(max_diff, (nm_file->offset - ml_file->offset).cwiseAbs().maxCoeff());
    const bool agree = max_diff < 5e-5;
    const ErrorMetrics gap = error_metrics(nm_file->params(), ml_file->params());

    json cmp;
    cmp["format_version"] = kFormatVersion;
    cmp["max_abs_difference"] = max_diff;
    cmp["agree_to_4_decimals"] = agree;
    cmp["nm_vs_ml_metrics"] = {
        {"e_s_pct", gap.scale_pct}, {"e_o_deg", gap.ortho_deg}, {"e_h_gauss", gap.hard_iron_gauss}};
    cmp["preferred"] = agree ? "either" : "ml";
    cmp["nm_converged"] = nm_file->converged;
    cmp["ml_converged"] = ml_file->converged;
    write_text_file(method_report_path(args.out, "comparison"), cmp.dump(2) + "\n");
    log << (agree ? "nm and ml estimates agree to 4 decimals\n" : "nm and ml estimates disagree; ml preferred\n");
    return code;
  });
}

int cmd_apply(const ApplyArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    const CalibrationReportFile report = CalibrationReportFile::load(args.report);
    const CsvReadResult csv = read_dataset_csv(args.input);
    for (const auto& w : csv.warnings) log << "warning: " << w << "\n";
    const CalibrationParams p = report.params();

    std::vector<double> magnitudes;
    std::ofstream out = open_out(args.out);
    out << "mx,my,mz,magnitude\n";
    for (const auto& y : csv.data.samples) {
      const Vec3 m = apply_calibration(p, y);
      magnitudes.push_back(m.norm());
      out << fmt(m.x()) << ',' << fmt(m.y()) << ',' << fmt(m.z()) << ',' << fmt(magnitudes.back()) << '\n';
    }

    if (!args.histogram.empty() && !magnitudes.empty()) {
      if (args.bins == 0) throw InputError("histogram needs at least one bin");
      const auto [lo_it, hi_it] = std::minmax_element(magnitudes.begin(), magnitudes.end());
      const double lo = *lo_it;
      const double width = (*hi_it - lo) / static_cast<double>(args.bins);
      std::vector<std::size_t> counts(args.bins, 0);
      for (double m : magnitudes) {
        const auto b = width > 0 ? static_cast<std::size_t>((m - lo) / width) : 0;
        ++counts[std::min(b, args.bins - 1)];
      }
      std::ofstream hist = open_out(args.histogram);
      hist << "bin_low,bin_high,count\n";
      for (std::size_t b = 0; b < args.bins; ++b) {
        hist << fmt(lo + width * static_cast<double>(b)) << ',' << fmt(lo + width * static_cast<double>(b + 1))
             << ',' << counts[b] << '\n';
      }
    }
    return int{kOk};
  });
}

int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const CalibrationReportFile est = CalibrationReportFile::load(args.estimate);
    const CalibrationReportFile ref = CalibrationReportFile::load(args.truth);
    const std::string text = metrics_to_json(error_metrics(est.params(), ref.params()));
    out << text;
    if (!args.out.empty()) write_text_file(args.out, text);
    return int{kOk};
  });
}

int cmd_montecarlo(const MonteCarloArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    if (args.out_prefix.empty()) throw InputError("an output prefix is required");
    const SimulationConfig cfg = config_or_defaults(args.config);
    const MonteCarloResult res = run_monte_carlo(cfg, args.runs, args.seed, {args.solve, args.workers});
    const std::string prefix = args.out_prefix.string();

    std::ofstream rows = open_out(prefix + "_runs.csv");
    rows << "run,noise_seed,method,solved,converged,iterations,final_objective,e_s_pct,e_o_deg,e_h_gauss\n";
    std::ofstream hist = open_out(prefix + "_objective.csv");
    hist << "run,method,iteration,objective\n";
    std::vector<MethodOutcome> nm, ml;
    for (const auto& r : res.runs) {
      for (const auto& [name, o] : {std::pair<const char*, const MethodOutcome*>{"nm", &r.nm}, {"ml", &r.ml}}) {
        rows << r.run << ',' << r.noise_seed << ',' << name << ',';
        write_outcome_row(rows, *o);
        rows << '\n';
        for (std::size_t i = 0; i < o->objective_history.size(); ++i) {
          hist << r.run << ',' << name << ',' << i << ',' << fmt(o->objective_history[i]) << '\n';
        }
      }
      nm.push_back(r.nm);
      ml.push_back(r.ml);
    }

    json summary;
    summary["format_version"] = kFormatVersion;
    summary["runs"] = args.runs;
    summary["master_seed"] = args.seed;
    summary["config"] = json::parse(simulation_config_to_json(cfg));
    summary["nm"] = summary_json(res.nm, nm);
    summary["ml"] = summary_json(res.ml, ml);
    write_text_file(prefix + "_summary.json", summary.dump(2) + "\n");

    log << "NM mean e_s " << res.nm.mean.scale_pct << "% e_o " << res.nm.mean.ortho_deg << " deg e_h "
        << res.nm.mean.hard_iron_gauss << "\n"
        << "ML mean e_s " << res.ml.mean.scale_pct << "% e_o " << res.ml.mean.ortho_deg << " deg e_h "
        << res.ml.mean.hard_iron_gauss << "\n";
    return int{kOk};
  });
}

int cmd_sensitivity(const SensitivityArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    if (args.out_prefix.empty()) throw InputError("an output prefix is required");
    const SimulationConfig cfg = config_or_defaults(args.config);
    const SensitivityResult res = run_sensitivity(cfg, args.alphas, args.runs, args.nm_threshold, args.ml_threshold,
                                                  args.seed, {args.solve, args.workers});
    const std::string prefix = args.out_prefix.string();

    std::ofstream rows = open_out(prefix + "_rows.csv");
    rows << "alpha,run,method,diverged,solved,converged,iterations,final_objective,e_s_pct,e_o_deg,e_h_gauss\n";
    for (const auto& r : res.rows) {
      rows << fmt(r.alpha) << ',' << r.run << ",nm," << (r.nm_diverged ? 1 : 0) << ',';
      write_outcome_row(rows, r.nm);
      rows << '\n' << fmt(r.alpha) << ',' << r.run << ",ml," << (r.ml_diverged ? 1 : 0) << ',';
      write_outcome_row(rows, r.ml);
      rows << '\n';
    }

    json summary;
    summary["format_version"] = kFormatVersion;
    summary["alphas"] = res.alphas;
    summary["runs"] = res.runs;
    summary["master_seed"] = res.master_seed;
    summary["nm_threshold"] = res.nm_threshold;
    summary["ml_threshold"] = res.ml_threshold;
    summary["nm_divergences"] = res.nm_divergences;
    summary["ml_divergences"] = res.ml_divergences;
    summary["config"] = json::parse(simulation_config_to_json(cfg));
    write_text_file(prefix + "_summary.json", summary.dump(2) + "\n");

    for (std::size_t i = 0; i < res.alphas.size(); ++i) {
      log << "alpha " << res.alphas[i] << ": NM " << res.nm_divergences[i] << "/" << res.runs << ", ML "
          << res.ml_divergences[i] << "/" << res.runs << " diverged\n";
    }
    return int{kOk};
  });
}

int cmd_timing(const TimingArgs& args, std::ostream& log) {
  return guarded(log, [&] {
    const SimulationConfig cfg = config_or_defaults(args.config);
    TimingOptions opts;
    opts.repeats = args.repeats;
    opts.dense_step_max_n = args.dense_max_n;
    const std::vector<TimingRow> rows = run_timing(cfg, args.n_values, opts);

    std::ostringstream csv;
    csv << "n,method,median_seconds,median_seconds_per_iteration,iterations\n";
    for (const auto& r : rows) {
      csv << r.n << ',' << r.method << ',' << fmt(r.median_seconds) << ',' << fmt(r.median_seconds_per_iteration)
          << ',' << r.iterations << '\n';
    }
    if (args.out.empty()) {
      log << csv.str();
    } else {
      write_text_file(args.out, csv.str());
    }
    return int{kOk};
  });
}

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T value{};
    if (!(is >> value) || !(is >> std::ws).eof()) throw InputError("cannot parse list item '" + item + "'");
    out.push_back(value);
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

void add_solve_options(CLI::App* cmd, SolveOptions& solve) {
  cmd->add_option("--max-iterations", solve.max_iterations, "Newton iteration cap")->capture_default_str();
  cmd->add_option("--objective-tol", solve.objective_tolerance, "NM exit: absolute objective change")
      ->capture_default_str();
  cmd->add_option("--step-tol", solve.step_tolerance, "exit: Newton step norm")->capture_default_str();
  cmd->add_option("--gradient-tol", solve.gradient_tolerance, "ML exit: Lagrangian gradient norm")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attitude-independent three-axis magnetometer calibration (NM and ML estimators)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs sim;
  std::uint64_t sim_seed = 0;
  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  c_sim->add_option("--config", sim.config, "simulation config JSON (default: reference scenario)");
  c_sim->add_option("--out", sim.out, "dataset CSV to write")->required();
  auto* sim_seed_opt = c_sim->add_option("--seed", sim_seed, "override the config seed");

  CalibrateArgs cal;
  bool no_center = false;
  auto* c_cal = app.add_subcommand("calibrate", "estimate R and h from a dataset CSV");
  c_cal->add_option("--input", cal.input, "dataset CSV (columns yx,yy,yz)")->required();
  c_cal->add_option("--method", cal.method, "nm | ml | both")->capture_default_str();
  c_cal->add_option("--out", cal.out, "report JSON")->required();
  c_cal->add_flag("--no-center", no_center, "do not center samples before the ellipsoid fit");
  add_solve_options(c_cal, cal.solve);

  ApplyArgs app_args;
  auto* c_apply = app.add_subcommand("apply", "apply a calibration report to a dataset CSV");
  c_apply->add_option("--report", app_args.report, "calibration report JSON")->required();
  c_apply->add_option("--input", app_args.input, "dataset CSV")->required();
  c_apply->add_option("--out", app_args.out, "calibrated CSV")->required();
  c_apply->add_option("--histogram", app_args.histogram, "magnitude histogram CSV");
  c_apply->add_option("--bins", app_args.bins, "histogram bins")->capture_default_str();

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "score an estimate against a reference report");
  c_met->add_option("--estimate", met.estimate, "estimate report JSON")->required();
  c_met->add_option("--truth", met.truth, "reference report JSON")->required();
  c_met->add_option("--out", met.out, "metrics JSON to write");

  MonteCarloArgs mc;
  auto* c_mc = app.add_subcommand("montecarlo", "Monte-Carlo accuracy study");
  c_mc->add_option("--config", mc.config, "simulation config JSON");
  c_mc->add_option("--runs", mc.runs)->capture_default_str();
  c_mc->add_option("--seed", mc.seed, "master seed")->capture_default_str();
  c_mc->add_option("--out-prefix", mc.out_prefix, "prefix of the result files")->required();
  c_mc->add_option("--workers", mc.workers, "worker threads (0: all cores)");
  add_solve_options(c_mc, mc.solve);

  SensitivityArgs sens;
  std::string alphas_text;
  auto* c_sens = app.add_subcommand("sensitivity", "divergence counts under perturbed initial estimates");
  c_sens->add_option("--config", sens.config, "simulation config JSON");
  c_sens->add_option("--alphas", alphas_text, "comma-separated perturbation fractions (default 0.01..0.07)");
  c_sens->add_option("--runs", sens.runs)->capture_default_str();
  c_sens->add_option("--nm-threshold", sens.nm_threshold)->capture_default_str();
  c_sens->add_option("--ml-threshold", sens.ml_threshold)->capture_default_str();
  c_sens->add_option("--seed", sens.seed, "master seed")->capture_default_str();
  c_sens->add_option("--out-prefix", sens.out_prefix, "prefix of the result files")->required();
  c_sens->add_option("--workers", sens.workers, "worker threads (0: all cores)");
  add_solve_options(c_sens, sens.solve);

  TimingArgs tim;
  std::string n_text;
  auto* c_tim = app.add_subcommand("timing", "wall-clock solve times versus N");
  c_tim->add_option("--config", tim.config, "simulation config JSON");
  c_tim->add_option("--n", n_text, "comma-separated sample counts (default 100,300,1000)");
  c_tim->add_option("--repeats", tim.repeats)->capture_default_str();
  c_tim->add_option("--dense-max-n", tim.dense_max_n, "also time one dense ML Newton step up to this N");
  c_tim->add_option("--out", tim.out, "timing CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int{kOk} : int{kInputError};
  }

  if (c_sim->parsed()) {
    if (sim_seed_opt->count() > 0) sim.seed = sim_seed;
    return cmd_simulate(sim, err);
  }
  if (c_cal->parsed()) {
    cal.center = !no_center;
    return cmd_calibrate(cal, err);
  }
  if (c_apply->parsed()) return cmd_apply(app_args, err);
  if (c_met->parsed()) return cmd_metrics(met, out, err);
  if (c_mc->parsed()) return cmd_montecarlo(mc, err);
  if (c_sens->parsed()) {
    return guarded(err, [&] {
      if (!alphas_text.empty()) sens.alphas = parse_list<double>(alphas_text);
      return cmd_sensitivity(sens, err);
    });
  }
  if (c_tim->parsed()) {
    return guarded(err, [&] {
      if (!n_text.empty()) tim.n_values = parse_list<std::size_t>(n_text);
      return cmd_timing(tim, err);
    });
  }
  return kInputError;
}

}  // namespace magcal::cli
