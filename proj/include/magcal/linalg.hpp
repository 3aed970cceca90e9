#pragma once

#include "magcal/types.hpp"

namespace magcal {

/**
 * Attitude matrix C_n^b for Euler angles given in degrees.
 *
 * Row layout:
 *   [ cθcψ,  sφsψ - cφcψsθ,  cφsψ + cψsφsθ ]
 *   [ sθ,    cφcθ,           -cθsφ         ]
 *   [ -cθsψ, cψsφ + cφsθsψ,  cφcψ - sφsθsψ ]
 */
Mat3 attitude_from_euler(double phi_deg, double theta_deg, double psi_deg);

struct QrResult {
  Mat3 q;
  UpperTriangular3 r;
};

/// m = q r with q orthogonal and r upper triangular with a positive diagonal.
QrResult qr_decompose(const Mat3& m);

/// Upper factor R of a symmetric positive definite a, with R^T R = a.
UpperTriangular3 cholesky_upper(const Mat3& a);

/// Splits r into unit upper-triangular M and diagonal Lambda with r = M Lambda.
ScaleOrthoDecomp decompose_scale_ortho(const UpperTriangular3& r);

}  // namespace magcal
