#pragma once

#include "magcal/types.hpp"

namespace magcal {

struct ErrorMetrics {
  double scale_pct = 0;        ///< e_s, percent
  double ortho_deg = 0;        ///< e_o, degrees
  double hard_iron_gauss = 0;  ///< e_h, Gauss
};

/// m = R (y - h).
Vec3 apply_calibration(const CalibrationParams& params, const Vec3& y);

/**
 * Scores an estimate against a reference after splitting both shapes into
 * R = M Lambda:
 *   e_s = |diag(Lambda^-1 Lambda_hat) - 1| / 3 * 100
 *   e_o = 180 / (3 pi) * |upper(M_hat - M)|
 *   e_h = |h_hat - h| / 3
 * All norms are Euclidean over three entries.
 */
ErrorMetrics error_metrics(const CalibrationParams& estimate, const CalibrationParams& truth);

}  // namespace magcal
