#pragma once

#include "magcal/simulator.hpp"
#include "magcal/types.hpp"

#include <random>

namespace magcal::testing {

inline UpperTriangular3 random_upper(std::mt19937_64& rng, double diag_lo = 0.5, double diag_hi = 2.0,
                                     double off = 0.5) {
  std::uniform_real_distribution<double> d(diag_lo, diag_hi);
  std::uniform_real_distribution<double> o(-off, off);
  return UpperTriangular3({d(rng), o(rng), o(rng), d(rng), o(rng), d(rng)});
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

template <class A, class B>
double rel_err(const A& a, const B& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// Reference scenario with the noise switched off.
inline Dataset noise_free_reference(std::size_t n = 300) {
  SimulationConfig cfg = SimulationConfig::reference_scenario();
  cfg.truth.noise_sigma = 0;
  cfg.n = n;
  return simulate(cfg.truth, cfg.trajectory(), 1);
}

inline Dataset noisy_reference(std::uint64_t seed, std::size_t n = 300) {
  SimulationConfig cfg = SimulationConfig::reference_scenario();
  cfg.n = n;
  return simulate(cfg.truth, cfg.trajectory(), seed);
}

/// Noise-free samples of a random sensor over uniformly random field directions.
inline Dataset random_sphere_data(std::mt19937_64& rng, const CalibrationParams& p, std::size_t n) {
  const UpperTriangular3 t = p.shape.inverse();
  Dataset d;
  for (std::size_t k = 0; k < n; ++k) d.samples.push_back(t * random_unit(rng) + p.offset);
  return d;
}

}  // namespace magcal::testing
