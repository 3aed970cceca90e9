#include "magcal/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace magcal {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool all_finite(const Mat3& m) { return m.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// UpperTriangular3

int UpperTriangular3::index(int row, int col) {
  // row-major packing of the upper triangle
  static constexpr int kIndex[3][3] = {{0, 1, 2}, {-1, 3, 4}, {-1, -1, 5}};
  return kIndex[row][col];
}

UpperTriangular3 UpperTriangular3::from_upper(const Mat3& m) {
  return UpperTriangular3({m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)});
}

double UpperTriangular3::operator()(int row, int col) const {
  const int i = index(row, col);
  return i < 0 ? 0.0 : e_[i];
}

Mat3 UpperTriangular3::matrix() const {
  Mat3 m;
  m << e_[0], e_[1], e_[2],
       0.0,   e_[3], e_[4],
       0.0,   0.0,   e_[5];
  return m;
}

UpperTriangular3 UpperTriangular3::inverse() const {
  const double a = e_[0], b = e_[1], c = e_[2], d = e_[3], e = e_[4], f = e_[5];
  if (a == 0.0 || d == 0.0 || f == 0.0) {
    throw DecompositionError("upper-triangular matrix has a zero diagonal entry");
  }
  // back substitution on the three columns of the identity
  const double ia = 1.0 / a, id = 1.0 / d, if_ = 1.0 / f;
  return UpperTriangular3({ia, -b * ia * id, (b * e - c * d) * ia * id * if_, id, -e * id * if_, if_});
}

Vec3 UpperTriangular3::operator*(const Vec3& v) const {
  return {e_[0] * v.x() + e_[1] * v.y() + e_[2] * v.z(), e_[3] * v.y() + e_[4] * v.z(), e_[5] * v.z()};
}

UpperTriangular3 ScaleOrthoDecomp::recompose() const {
  const auto& m = m_matrix.entries();
  return UpperTriangular3({m[0] * lambda.x(), m[1] * lambda.y(), m[2] * lambda.z(), m[3] * lambda.y(),
                           m[4] * lambda.z(), m[5] * lambda.z()});
}

// ---------------------------------------------------------------------------

Mat3 attitude_from_euler(double phi_deg, double theta_deg, double psi_deg) {
  const double sf = std::sin(phi_deg * kDegToRad), cf = std::cos(phi_deg * kDegToRad);
  const double st = std::sin(theta_deg * kDegToRad), ct = std::cos(theta_deg * kDegToRad);
  const double sp = std::sin(psi_deg * kDegToRad), cp = std::cos(psi_deg * kDegToRad);

  Mat3 c;
  c << ct * cp, sf * sp - cf * cp * st, cf * sp + cp * sf * st,
       st,      cf * ct,                -ct * sf,
       -ct * sp, cp * sf + cf * st * sp, cf * cp - sf * st * sp;
  return c;
}

QrResult qr_decompose(const Mat3& m) {
  if (!all_finite(m)) {
    throw DecompositionError("qr_decompose: non-finite input");
  }
  const Eigen::HouseholderQR<Mat3> qr(m);
  Mat3 q = qr.householderQ();
  Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();

  const double scale = m.norm();
  for (int i = 0; i < 3; ++i) {
    if (!(std::abs(r(i, i)) > 64 * std::numeric_limits<double>::epsilon() * scale)) {
      throw DecompositionError("qr_decompose: matrix is singular");
    }
    if (r(i, i) < 0) {
      q.col(i) *= -1.0;
      r.row(i) *= -1.0;
    }
  }
  return {q, UpperTriangular3::from_upper(r)};
}

UpperTriangular3 cholesky_upper(const Mat3& a) {
  if (!all_finite(a)) {
    throw DecompositionError("cholesky_upper: non-finite input");
  }
  const double d11 = a(0, 0);
  if (!(d11 > 0)) {
    throw DecompositionError("cholesky_upper: matrix is not positive definite");
  }
  const double r11 = std::sqrt(d11);
  const double r12 = a(0, 1) / r11;
  const double r13 = a(0, 2) / r11;
  const double d22 = a(1, 1) - r12 * r12;
  if (!(d22 > 0)) {
    throw DecompositionError("cholesky_upper: matrix is not positive definite");
  }
  const double r22 = std::sqrt(d22);
  const double r23 = (a(1, 2) - r12 * r13) / r22;
  const double d33 = a(2, 2) - r13 * r13 - r23 * r23;
  if (!(d33 > 0)) {
    throw DecompositionError("cholesky_upper: matrix is not positive definite");
  }
  return UpperTriangular3({r11, r12, r13, r22, r23, std::sqrt(d33)});
}

ScaleOrthoDecomp decompose_scale_ortho(const UpperTriangular3& r) {
  const Vec3 lambda = r.diag();
  if (lambda.x() == 0.0 || lambda.y() == 0.0 || lambda.z() == 0.0) {
    throw DecompositionError("decompose_scale_ortho: zero diagonal entry");
  }
  const auto& e = r.entries();
  // column j of M is column j of r divided by lambda_j; the diagonal is set exactly
  const UpperTriangular3 m({1.0, e[1] / lambda.y(), e[2] / lambda.z(), 1.0, e[4] / lambda.z(), 1.0});
  return {m, lambda};
}

}  // namespace magcal
