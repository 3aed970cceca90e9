#pragma once

#include "magcal/simulator.hpp"
#include "magcal/types.hpp"

#include <array>

namespace magcal {

using DesignRow = Eigen::Matrix<double, 10, 1>;

/// Quadric y^T A y + b^T y + c = 0. A is stored through its upper triangle.
struct EllipsoidCoeffs {
  UpperTriangular3 a_upper;
  Vec3 b_vec = Vec3::Zero();
  double c_scalar = 0;

  Mat3 a_matrix() const;
  /// Packed as (a11, a12, a22, a13, a23, a33, b1, b2, b3, c), matching DesignRow.
  DesignRow packed() const;
  static EllipsoidCoeffs from_packed(const DesignRow& z);
};

/**
 * One row of the linear system Y z = 0:
 *   [y1^2, 2 y1 y2, y2^2, 2 y1 y3, 2 y2 y3, y3^2, y1, y2, y3, 1]
 * The quadratic monomials follow the column-stacked upper triangle of A; the
 * symmetric off-diagonal columns are merged, hence the factor 2.
 */
DesignRow build_design_row(const Vec3& y);

struct FitOptions {
  /// Fit in coordinates centered on the sample mean, then translate back.
  bool center = true;
};

struct EllipsoidFit {
  EllipsoidCoeffs coeffs;           ///< scaled so that h^T A h - c = 1, in the data frame
  DesignRow unit_eigenvector;       ///< raw minimum eigenvector in the fitting frame
  double min_eigenvalue = 0;        ///< of Y^T Y in the fitting frame
  Vec3 center = Vec3::Zero();       ///< mean subtracted before fitting (zero if not centered)
};

EllipsoidFit fit_ellipsoid(const Dataset& data, const FitOptions& opts = {});

/// h = -A^-1 b / 2, R = chol(A).
CalibrationParams initial_params(const EllipsoidCoeffs& coeffs);

/// T = R^-1, m_k = R (y_k - h), lambda_k = 0.
MLState initial_ml_state(const CalibrationParams& params, const Dataset& data);

}  // namespace magcal
