#pragma once

#include "magcal/metrics.hpp"
#include "magcal/simulator.hpp"
#include "magcal/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace magcal {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// On-disk calibration result. Upper-triangular matrices serialize as (d11, d12, d13, d22, d23, d33).
struct CalibrationReportFile {
  std::string method;  ///< "nm", "ml" or "truth"
  UpperTriangular3 shape = UpperTriangular3::identity();
  std::optional<UpperTriangular3> t_matrix;  ///< ML only
  Vec3 offset = Vec3::Zero();
  std::vector<double> objective_history;
  std::vector<double> constraint_violation_history;  ///< ML only
  int iterations = 0;
  bool converged = false;
  std::optional<double> min_eigenvalue;
  std::string tool_version = kToolVersion;
  std::string input_digest;
  std::vector<std::string> warnings;

  CalibrationParams params() const { return {shape, offset}; }

  std::string to_json() const;
  /// Throws InputError on malformed JSON, missing fields or an unsupported format_version.
  static CalibrationReportFile from_json(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static CalibrationReportFile load(const std::filesystem::path& path);
};

/**
 * Simulation config document:
 *   {"soft_iron": [9, row-major], "hard_iron": [3], "sigma": s, "field": [3], "n": N, "seed": k,
 *    "tilt_amplitude_deg": A (optional, default 20)}
 * The field is renormalized to unit length on load.
 */
SimulationConfig parse_simulation_config(const std::string& text);
SimulationConfig load_simulation_config(const std::filesystem::path& path);
std::string simulation_config_to_json(const SimulationConfig& cfg);

std::string metrics_to_json(const ErrorMetrics& m);

/// Reads the whole file; throws InputError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace magcal
