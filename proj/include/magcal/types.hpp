#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace magcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad config, size mismatch, parse failure).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Fewer samples than the estimator needs.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The data do not excite enough attitudes to pin down an ellipsoid.
class DegenerateExcitationError : public Error {
 public:
  using Error::Error;
};

/// A decomposition was asked of a matrix that does not admit one.
class DecompositionError : public Error {
 public:
  using Error::Error;
};

/**
 * @brief Upper-triangular 3x3 matrix stored as its six free entries.
 *
 * Entries are kept in row-major order (d11, d12, d13, d22, d23, d33), which is
 * also the serialized form. The implied lower-triangular entries are zero.
 */
class UpperTriangular3 {
 public:
  using Entries = std::array<double, 6>;

  UpperTriangular3() = default;
  explicit UpperTriangular3(const Entries& row_major) : e_(row_major) {}

  static UpperTriangular3 identity() { return UpperTriangular3({1, 0, 0, 1, 0, 1}); }
  static UpperTriangular3 diagonal(const Vec3& d) { return UpperTriangular3({d.x(), 0, 0, d.y(), 0, d.z()}); }

  /// Keeps the upper triangle of m; the strictly lower part is dropped.
  static UpperTriangular3 from_upper(const Mat3& m);

  double operator()(int row, int col) const;
  const Entries& entries() const { return e_; }

  Mat3 matrix() const;
  Vec3 diag() const { return {e_[0], e_[3], e_[5]}; }
  bool has_positive_diagonal() const { return e_[0] > 0 && e_[3] > 0 && e_[5] > 0; }

  /// Triangular inverse; throws DecompositionError on a zero diagonal entry.
  UpperTriangular3 inverse() const;

  Vec3 operator*(const Vec3& v) const;

  bool operator==(const UpperTriangular3&) const = default;

 private:
  static int index(int row, int col);
  Entries e_{};
};

/// Shape matrix R (Gauss^-1) and hard-iron offset h (Gauss); m = R (y - h).
struct CalibrationParams {
  UpperTriangular3 shape = UpperTriangular3::identity();
  Vec3 offset = Vec3::Zero();
};

/// Iterate of the constrained ML problem: T = R^-1, h, per-sample field directions and multipliers.
struct MLState {
  UpperTriangular3 t_matrix = UpperTriangular3::identity();
  Vec3 offset = Vec3::Zero();
  std::vector<Vec3> field_dirs;
  std::vector<double> lagrange;

  std::size_t size() const { return field_dirs.size(); }
  CalibrationParams params() const { return {t_matrix.inverse(), offset}; }
};

/// R = M * Lambda with M unit upper-triangular and Lambda diagonal.
struct ScaleOrthoDecomp {
  UpperTriangular3 m_matrix = UpperTriangular3::identity();
  Vec3 lambda = Vec3::Ones();

  UpperTriangular3 recompose() const;
};

}  // namespace magcal
