#pragma once

#include "magcal/solve.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace magcal::cli {

/// Stable exit-code contract for scripting.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kDegenerateData = 3,
  kSolverFailure = 4,
};

struct SimulateArgs {
  std::filesystem::path config;  ///< empty: reference scenario defaults
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

struct CalibrateArgs {
  std::filesystem::path input;
  std::string method = "both";  ///< nm | ml | both
  std::filesystem::path out;
  SolveOptions solve;
  bool center = true;
};

struct ApplyArgs {
  std::filesystem::path report;
  std::filesystem::path input;
  std::filesystem::path out;
  std::filesystem::path histogram;  ///< optional magnitude histogram CSV
  std::size_t bins = 30;
};

struct MetricsArgs {
  std::filesystem::path estimate;
  std::filesystem::path truth;
  std::filesystem::path out;  ///< optional; the JSON is always printed
};

struct MonteCarloArgs {
  std::filesystem::path config;
  std::size_t runs = 50;
  std::uint64_t seed = 2016;
  std::filesystem::path out_prefix;
  unsigned workers = 0;
  SolveOptions solve;
};

struct SensitivityArgs {
  std::filesystem::path config;
  std::vector<double> alphas = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07};
  std::size_t runs = 50;
  double nm_threshold = 0.018;
  double ml_threshold = 0.004;
  std::uint64_t seed = 2016;
  std::filesystem::path out_prefix;
  unsigned workers = 0;
  SolveOptions solve;
};

struct TimingArgs {
  std::filesystem::path config;
  std::vector<std::size_t> n_values = {100, 300, 1000};
  std::size_t repeats = 5;
  std::size_t dense_max_n = 0;
  std::filesystem::path out;
};

/// Writes `<out>` and the truth sidecar `<out stem>.truth.json`.
int cmd_simulate(const SimulateArgs& args, std::ostream& log);
/// With method "both", writes `<stem>.nm.json`, `<stem>.ml.json` and `<stem>.comparison.json`.
int cmd_calibrate(const CalibrateArgs& args, std::ostream& log);
int cmd_apply(const ApplyArgs& args, std::ostream& log);
int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& log);
/// Writes `<prefix>_runs.csv`, `<prefix>_objective.csv` and `<prefix>_summary.json`.
int cmd_montecarlo(const MonteCarloArgs& args, std::ostream& log);
/// Writes `<prefix>_rows.csv` and `<prefix>_summary.json`.
int cmd_sensitivity(const SensitivityArgs& args, std::ostream& log);
int cmd_timing(const TimingArgs& args, std::ostream& log);

/// Path of the truth sidecar written next to a simulated dataset.
std::filesystem::path truth_sidecar_path(const std::filesystem::path& dataset);
/// Path of the per-method report for `calibrate --method both`.
std::filesystem::path method_report_path(const std::filesystem::path& out, const std::string& method);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace magcal::cli
