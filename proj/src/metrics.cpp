#include "magcal/metrics.hpp"

#include "magcal/linalg.hpp"

#include <numbers>

namespace magcal {

Vec3 apply_calibration(const CalibrationParams& params, const Vec3& y) { return params.shape * (y - params.offset); }

ErrorMetrics error_metrics(const CalibrationParams& estimate, const CalibrationParams& truth) {
  const ScaleOrthoDecomp est = decompose_scale_ortho(estimate.shape);
  const ScaleOrthoDecomp ref = decompose_scale_ortho(truth.shape);

  const Vec3 scale_err = est.lambda.cwiseQuotient(ref.lambda) - Vec3::Ones();

  const auto& me = est.m_matrix.entries();
  const auto& mr = ref.m_matrix.entries();
  const Vec3 ortho_err(me[1] - mr[1], me[2] - mr[2], me[4] - mr[4]);

  ErrorMetrics out;
  out.scale_pct = scale_err.norm() / 3.0 * 100.0;
  out.ortho_deg = 180.0 / (3.0 * std::numbers::pi) * ortho_err.norm();
  out.hard_iron_gauss = (estimate.offset - truth.offset).norm() / 3.0;
  return out;
}

}  // namespace magcal
