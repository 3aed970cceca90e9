#pragma once

#include "magcal/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace magcal {

/// Ground-truth sensor model y = S C m^n + h + e, e ~ N(0, sigma^2 I).
struct SensorTruth {
  Mat3 soft_iron = Mat3::Identity();
  Vec3 hard_iron = Vec3::Zero();
  double noise_sigma = 0.0;
  Vec3 field = Vec3::UnitX();

  /// Throws InputError unless the invariants hold (unit field, invertible S, sigma >= 0).
  void validate() const;

  /// Calibration parameters that undo this model: R from the QR factor of S^-1, h.
  CalibrationParams calibration() const;
};

struct EulerAngles {
  double phi_deg = 0;
  double theta_deg = 0;
  double psi_deg = 0;
};

using Trajectory = std::vector<EulerAngles>;

struct Dataset {
  std::vector<Vec3> samples;
  std::optional<SensorTruth> truth;
  std::optional<Trajectory> trajectory;

  std::size_t size() const { return samples.size(); }
};

/**
 * Coning trajectory evaluated at k = 1..n:
 *   phi = A sin(20 pi k / n + pi / 2), theta = A sin(20 pi k / n), psi = 360 k / n
 * with tilt amplitude A in degrees (20 for the reference scenario).
 */
Trajectory coning_trajectory(std::size_t n, double tilt_amplitude_deg = 20.0);

/// Deterministic in (truth, traj, seed).
Dataset simulate(const SensorTruth& truth, const Trajectory& traj, std::uint64_t seed);

/// Everything needed to reproduce one simulated scenario.
struct SimulationConfig {
  SensorTruth truth;
  std::size_t n = 300;
  std::uint64_t seed = 1;
  double tilt_amplitude_deg = 20.0;

  /// Soft/hard iron of the reference scenario, sigma = 0.003, N = 300.
  static SimulationConfig reference_scenario();

  void validate() const;
  Trajectory trajectory() const { return coning_trajectory(n, tilt_amplitude_deg); }
};

}  // namespace magcal
