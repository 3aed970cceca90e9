#include "magcal/simulator.hpp"

#include "magcal/linalg.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace magcal {

void SensorTruth::validate() const {
  if (!soft_iron.allFinite() || !hard_iron.allFinite() || !field.allFinite() || !std::isfinite(noise_sigma)) {
    throw InputError("sensor truth has non-finite entries");
  }
  if (noise_sigma < 0) {
    throw InputError("noise sigma must be non-negative");
  }
  if (std::abs(field.norm() - 1.0) > 1e-12) {
    throw InputError("field vector must have unit norm");
  }
  if (std::abs(soft_iron.determinant()) < 1e-12) {
    throw InputError("soft-iron matrix is singular");
  }
}

CalibrationParams SensorTruth::calibration() const {
  return {qr_decompose(soft_iron.inverse()).r, hard_iron};
}

Trajectory coning_trajectory(std::size_t n, double tilt_amplitude_deg) {
  if (n == 0) {
    throw InputError("trajectory needs at least one sample");
  }
  if (!std::isfinite(tilt_amplitude_deg)) {
    throw InputError("tilt amplitude must be finite");
  }
  constexpr double pi = std::numbers::pi;
  const double nn = static_cast<double>(n);
  Trajectory traj;
  traj.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double k = static_cast<double>(i);
    traj.push_back({tilt_amplitude_deg * std::sin(20.0 * pi * k / nn + pi / 2.0),
                    tilt_amplitude_deg * std::sin(20.0 * pi * k / nn), 360.0 * k / nn});
  }
  return traj;
}

Dataset simulate(const SensorTruth& truth, const Trajectory& traj, std::uint64_t seed) {
  truth.validate();
  if (traj.empty()) {
    throw InputError("trajectory is empty");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset data;
  data.samples.reserve(traj.size());
  for (const auto& att : traj) {
    const Mat3 c = attitude_from_euler(att.phi_deg, att.theta_deg, att.psi_deg);
    Vec3 noise;
    noise.x() = gauss(rng);
    noise.y() = gauss(rng);
    noise.z() = gauss(rng);
    data.samples.push_back(truth.soft_iron * (c * truth.field) + truth.hard_iron + truth.noise_sigma * noise);
  }
  data.truth = truth;
  data.trajectory = traj;
  return data;
}

SimulationConfig SimulationConfig::reference_scenario() {
  SimulationConfig cfg;
  cfg.truth.soft_iron << 0.7, -0.8, 0.4,
                         1.1, 0.3, -0.1,
                         -0.3, 0.6, 0.7;
  cfg.truth.hard_iron = Vec3(0.5, 1.7, 2.6);
  cfg.truth.noise_sigma = 0.003;
  // published field has norm 0.99926; renormalized to the unit sphere
  cfg.truth.field = Vec3(0.7388, 0.0409, -0.6727).normalized();
  cfg.n = 300;
  cfg.seed = 1;
  return cfg;
}

void SimulationConfig::validate() const {
  truth.validate();
  if (n == 0) {
    throw InputError("n must be at least 1");
  }
  if (!std::isfinite(tilt_amplitude_deg)) {
    throw InputError("tilt amplitude must be finite");
  }
}

}  // namespace magcal
