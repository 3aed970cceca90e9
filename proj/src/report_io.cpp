#include "magcal/report_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace magcal {

using nlohmann::json;

namespace {

json upper_to_json(const UpperTriangular3& u) { return json(u.entries()); }

UpperTriangular3 upper_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 6) {
    throw InputError(std::string("field '") + name + "' must be an array of 6 numbers");
  }
  return UpperTriangular3(j.get<UpperTriangular3::Entries>());
}

Vec3 vec_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 3) {
    throw InputError(std::string("field '") + name + "' must be an array of 3 numbers");
  }
  const auto v = j.get<std::array<double, 3>>();
  return {v[0], v[1], v[2]};
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

void check_version(const json& j) {
  const int version = j.value("format_version", kFormatVersion);
  if (version != kFormatVersion) {
    throw InputError("unsupported format_version " + std::to_string(version));
  }
}

}  // namespace

std::string CalibrationReportFile::to_json() const {
  json j;
  j["format_version"] = kFormatVersion;
  j["method"] = method;
  j["shape"] = upper_to_json(shape);
  if (t_matrix) j["t_matrix"] = upper_to_json(*t_matrix);
  j["offset"] = {offset.x(), offset.y(), offset.z()};
  j["objective_history"] = objective_history;
  if (!constraint_violation_history.empty()) j["constraint_violation_history"] = constraint_violation_history;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["min_eigenvalue"] = min_eigenvalue ? json(*min_eigenvalue) : json(nullptr);
  j["tool_version"] = tool_version;
  j["input_digest"] = input_digest;
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

CalibrationReportFile CalibrationReportFile::from_json(const std::string& text) {
  const json j = parse(text);
  try {
    check_version(j);
    CalibrationReportFile r;
    r.method = j.at("method").get<std::string>();
    r.shape = upper_from_json(j.at("shape"), "shape");
    if (j.contains("t_matrix")) r.t_matrix = upper_from_json(j.at("t_matrix"), "t_matrix");
    r.offset = vec_from_json(j.at("offset"), "offset");
    r.objective_history = j.value("objective_history", std::vector<double>{});
    r.constraint_violation_history = j.value("constraint_violation_history", std::vector<double>{});
    r.iterations = j.value("iterations", 0);
    r.converged = j.value("converged", false);
    if (j.contains("min_eigenvalue") && !j.at("min_eigenvalue").is_null()) {
      r.min_eigenvalue = j.at("min_eigenvalue").get<double>();
    }
    r.tool_version = j.value("tool_version", std::string{});
    r.input_digest = j.value("input_digest", std::string{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    if (!r.shape.has_positive_diagonal()) {
      throw InputError("report shape matrix must have a positive diagonal");
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed calibration report: ") + e.what());
  }
}

void CalibrationReportFile::save(const std::filesystem::path& path) const { write_text_file(path, to_json()); }

CalibrationReportFile CalibrationReportFile::load(const std::filesystem::path& path) {
  return from_json(read_text_file(path));
}

SimulationConfig parse_simulation_config(const std::string& text) {
  const json j = parse(text);
  try {
    check_version(j);
    SimulationConfig cfg;
    const json& s = j.at("soft_iron");
    if (!s.is_array() || s.size() != 9) {
      throw InputError("field 'soft_iron' must be an array of 9 numbers (row-major)");
    }
    const auto si = s.get<std::array<double, 9>>();
    for (int i = 0; i < 9; ++i) cfg.truth.soft_iron(i / 3, i % 3) = si[i];
    cfg.truth.hard_iron = vec_from_json(j.at("hard_iron"), "hard_iron");
    cfg.truth.noise_sigma = j.at("sigma").get<double>();
    const Vec3 field = vec_from_json(j.at("field"), "field");
    if (!(field.norm() > 0)) {
      throw InputError("field vector must be nonzero");
    }
    cfg.truth.field = field.normalized();

    const json& n = j.at("n");
    if (!n.is_number_integer() || n.get<long long>() < 0) {
      throw InputError("field 'n' must be a non-negative integer");
    }
    cfg.n = n.get<std::size_t>();
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.tilt_amplitude_deg = j.value("tilt_amplitude_deg", 20.0);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed simulation config: ") + e.what());
  }
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  return parse_simulation_config(read_text_file(path));
}

std::string simulation_config_to_json(const SimulationConfig& cfg) {
  json j;
  j["format_version"] = kFormatVersion;
  std::array<double, 9> si{};
  for (int i = 0; i < 9; ++i) si[i] = cfg.truth.soft_iron(i / 3, i % 3);
  j["soft_iron"] = si;
  j["hard_iron"] = {cfg.truth.hard_iron.x(), cfg.truth.hard_iron.y(), cfg.truth.hard_iron.z()};
  j["sigma"] = cfg.truth.noise_sigma;
  j["field"] = {cfg.truth.field.x(), cfg.truth.field.y(), cfg.truth.field.z()};
  j["n"] = cfg.n;
  j["seed"] = cfg.seed;
  j["tilt_amplitude_deg"] = cfg.tilt_amplitude_deg;
  return j.dump(2) + "\n";
}

std::string metrics_to_json(const ErrorMetrics& m) {
  json j;
  j["format_version"] = kFormatVersion;
  j["e_s_pct"] = m.scale_pct;
  j["e_o_deg"] = m.ortho_deg;
  j["e_h_gauss"] = m.hard_iron_gauss;
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace magcal
