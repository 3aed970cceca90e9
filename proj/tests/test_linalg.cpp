#include "magcal/linalg.hpp"
#include "magcal/simulator.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace magcal;
using magcal::testing::random_upper;

namespace {

bool within_ulps(double a, double b, int ulps) {
  double x = b;
  for (int i = 0; i < ulps; ++i) x = std::nextafter(x, a);
  return a == x;
}

}  // namespace

TEST_CASE("attitude_from_euler matches hand-evaluated layouts") {
  CHECK(attitude_from_euler(0, 0, 0).isApprox(Mat3::Identity(), 0.0));

  Mat3 expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((attitude_from_euler(90, 0, 0) - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("attitude_from_euler is a proper rotation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-360, 360);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 c = attitude_from_euler(ang(rng), ang(rng), ang(rng));
    CHECK((c.transpose() * c - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(c.determinant() - 1.0) <= 1e-12);
  }
}

TEST_CASE("qr_decompose examples") {
  const QrResult id = qr_decompose(Mat3::Identity());
  CHECK((id.q - Mat3::Identity()).norm() <= 1e-15);
  CHECK(id.r == UpperTriangular3::identity());

  const QrResult d = qr_decompose(Vec3(2, 3, 4).asDiagonal());
  CHECK((d.q - Mat3::Identity()).norm() <= 1e-15);
  CHECK((d.r.matrix() - Mat3(Vec3(2, 3, 4).asDiagonal())).norm() <= 1e-14);

  const Mat3 s_inv = SimulationConfig::reference_scenario().truth.soft_iron.inverse();
  const QrResult p = qr_decompose(s_inv);
  CHECK((p.q * p.r.matrix() - s_inv).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("qr_decompose properties on random matrices") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  for (int i = 0; i < 500; ++i) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = n(rng);
    const QrResult qr = qr_decompose(m);
    CHECK((qr.q * qr.r.matrix() - m).norm() <= 1e-10 * m.norm());
    CHECK((qr.q.transpose() * qr.q - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(qr.r.has_positive_diagonal());
  }
}

TEST_CASE("qr_decompose rejects singular input") {
  Mat3 m;
  m << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  CHECK_THROWS_AS(qr_decompose(m), DecompositionError);
  CHECK_THROWS_AS(qr_decompose(Mat3::Zero()), DecompositionError);
}

TEST_CASE("cholesky_upper examples and round trip") {
  CHECK(cholesky_upper(Mat3::Identity()) == UpperTriangular3::identity());
  CHECK(cholesky_upper(Vec3(4, 9, 16).asDiagonal()) == UpperTriangular3::diagonal(Vec3(2, 3, 4)));

  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    const UpperTriangular3 r = random_upper(rng);
    const Mat3 a = r.matrix().transpose() * r.matrix();
    const UpperTriangular3 back = cholesky_upper(a);
    CHECK((back.matrix() - r.matrix()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((back.matrix().transpose() * back.matrix() - a).norm() <= 1e-10 * a.norm());
  }
}

TEST_CASE("cholesky_upper rejects indefinite input") {
  CHECK_THROWS_AS(cholesky_upper(Vec3(1, -1, 1).asDiagonal()), DecompositionError);
  Mat3 a;
  a << 1, 2, 0, 2, 1, 0, 0, 0, 1;
  CHECK_THROWS_AS(cholesky_upper(a), DecompositionError);
}

TEST_CASE("decompose_scale_ortho examples") {
  const ScaleOrthoDecomp d = decompose_scale_ortho(UpperTriangular3::diagonal(Vec3(2, 3, 4)));
  CHECK(d.m_matrix == UpperTriangular3::identity());
  CHECK(d.lambda == Vec3(2, 3, 4));

  const ScaleOrthoDecomp e = decompose_scale_ortho(UpperTriangular3({2, 1, 0, 1, 1, 4}));
  CHECK(e.lambda == Vec3(2, 1, 4));
  CHECK(e.m_matrix == UpperTriangular3({1, 1, 0, 1, 0.25, 1}));
  CHECK(e.recompose() == UpperTriangular3({2, 1, 0, 1, 1, 4}));

  CHECK_THROWS_AS(decompose_scale_ortho(UpperTriangular3({0, 1, 0, 1, 1, 4})), DecompositionError);
}

TEST_CASE("decompose_scale_ortho round trip") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 2000; ++i) {
    const UpperTriangular3 r = random_upper(rng, 0.1, 10.0, 3.0);
    const ScaleOrthoDecomp d = decompose_scale_ortho(r);
    CHECK(d.m_matrix.diag() == Vec3::Ones());
    const UpperTriangular3 back = d.recompose();
    // diagonal entries recompose exactly; off-diagonals go through one division and one product
    for (int k : {0, 3, 5}) CHECK(back.entries()[k] == r.entries()[k]);
    for (int k : {1, 2, 4}) CHECK(within_ulps(back.entries()[k], r.entries()[k], 1));
  }
}

TEST_CASE("UpperTriangular3 inverse and product") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 200; ++i) {
    const UpperTriangular3 r = random_upper(rng);
    CHECK((r.inverse().matrix() * r.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    const Vec3 v = magcal::testing::random_vec(rng);
    CHECK((r * v - r.matrix() * v).norm() <= 1e-14);
  }
  CHECK_THROWS_AS(UpperTriangular3({1, 0, 0, 0, 0, 1}).inverse(), DecompositionError);
  const Mat3 full = Mat3::Constant(3.0);
  CHECK(UpperTriangular3::from_upper(full).matrix()(2, 0) == 0.0);
  CHECK(UpperTriangular3::from_upper(full)(0, 2) == 3.0);
}
