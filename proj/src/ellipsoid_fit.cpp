#include "magcal/ellipsoid_fit.hpp"

#include "magcal/linalg.hpp"

#include <cmath>

namespace magcal {

Mat3 EllipsoidCoeffs::a_matrix() const {
  Mat3 a = a_upper.matrix();
  a.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
  return a;
}

DesignRow EllipsoidCoeffs::packed() const {
  const auto& e = a_upper.entries();
  DesignRow z;
  z << e[0], e[1], e[3], e[2], e[4], e[5], b_vec.x(), b_vec.y(), b_vec.z(), c_scalar;
  return z;
}

EllipsoidCoeffs EllipsoidCoeffs::from_packed(const DesignRow& z) {
  EllipsoidCoeffs c;
  c.a_upper = UpperTriangular3({z(0), z(1), z(3), z(2), z(4), z(5)});
  c.b_vec = z.segment<3>(6);
  c.c_scalar = z(9);
  return c;
}

DesignRow build_design_row(const Vec3& y) {
  DesignRow row;
  row << y.x() * y.x(), 2 * y.x() * y.y(), y.y() * y.y(), 2 * y.x() * y.z(), 2 * y.y() * y.z(), y.z() * y.z(),
      y.x(), y.y(), y.z(), 1.0;
  return row;
}

EllipsoidFit fit_ellipsoid(const Dataset& data, const FitOptions& opts) {
  const std::size_t n = data.size();
  if (n < 10) {
    throw InsufficientDataError("ellipsoid fit needs at least 10 samples, got " + std::to_string(n));
  }

  Vec3 center = Vec3::Zero();
  if (opts.center) {
    for (const auto& y : data.samples) center += y;
    center /= static_cast<double>(n);
  }

  Eigen::Matrix<double, 10, 10> gram = Eigen::Matrix<double, 10, 10>::Zero();
  for (const auto& y : data.samples) {
    const DesignRow row = build_design_row(y - center);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
  }
  gram = gram.selfadjointView<Eigen::Lower>();

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 10, 10>> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw DegenerateExcitationError("eigen-decomposition of the design Gram matrix failed");
  }
  // eigenvalues are sorted ascending
  DesignRow z = eig.eigenvectors().col(0);
  const double min_eigenvalue = eig.eigenvalues()(0);

  EllipsoidCoeffs fitted = EllipsoidCoeffs::from_packed(z);
  const Mat3 a = fitted.a_matrix();
  const double m1 = a(0, 0);
  const double m2 = a.topLeftCorner<2, 2>().determinant();
  const double m3 = a.determinant();
  if (m1 > 0 && m2 > 0 && m3 > 0) {
    // already positive definite
  } else if (m1 < 0 && m2 > 0 && m3 < 0) {
    z = -z;
  } else {
    throw DegenerateExcitationError("fitted quadric is not an ellipsoid");
  }
  fitted = EllipsoidCoeffs::from_packed(z);

  const Mat3 ae = fitted.a_matrix();
  const Vec3& be = fitted.b_vec;
  const double alpha = 4.0 / (be.dot(ae.ldlt().solve(be)) - 4.0 * fitted.c_scalar);
  if (!(alpha > 0) || !std::isfinite(alpha)) {
    throw DegenerateExcitationError("ellipsoid scale factor is not positive");
  }

  // undo the centering: y_c = y - mu
  const Mat3 a_s = alpha * ae;
  const Vec3 b_c = alpha * be;
  const double c_c = alpha * fitted.c_scalar;

  EllipsoidFit out;
  out.coeffs.a_upper = UpperTriangular3::from_upper(a_s);
  out.coeffs.b_vec = b_c - 2.0 * a_s * center;
  out.coeffs.c_scalar = c_c + center.dot(a_s * center) - b_c.dot(center);
  out.unit_eigenvector = z;
  out.min_eigenvalue = min_eigenvalue;
  out.center = center;
  return out;
}

CalibrationParams initial_params(const EllipsoidCoeffs& coeffs) {
  const Mat3 a = coeffs.a_matrix();
  CalibrationParams p;
  try {
    p.shape = cholesky_upper(a);
  } catch (const DecompositionError& e) {
    throw DegenerateExcitationError(std::string("initial estimate: ") + e.what());
  }
  // A^-1 b through the triangular factors
  const Mat3 r = p.shape.matrix();
  const Vec3 w = r.transpose().triangularView<Eigen::Lower>().solve(coeffs.b_vec);
  p.offset = -0.5 * r.triangularView<Eigen::Upper>().solve(w);
  return p;
}

MLState initial_ml_state(const CalibrationParams& params, const Dataset& data) {
  MLState s;
  s.t_matrix = params.shape.inverse();
  s.offset = params.offset;
  s.field_dirs.reserve(data.size());
  for (const auto& y : data.samples) {
    s.field_dirs.push_back(params.shape * (y - params.offset));
  }
  s.lagrange.assign(data.size(), 0.0);
  return s;
}

}  // namespace magcal
