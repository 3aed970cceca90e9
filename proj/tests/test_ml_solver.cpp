#include "magcal/ellipsoid_fit.hpp"
#include "magcal/metrics.hpp"
#include "magcal/ml_solver.hpp"
#include "magcal/nm_solver.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace magcal;
using namespace magcal::testing;

namespace {

MLState random_state(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1, 1);
  MLState s;
  s.t_matrix = random_upper(rng);
  s.offset = random_vec(rng);
  for (std::size_t k = 0; k < n; ++k) {
    s.field_dirs.push_back(random_unit(rng) * (1 + 0.2 * u(rng)));
    s.lagrange.push_back(u(rng));
  }
  return s;
}

Eigen::VectorXd fd_gradient(const MLState& s, const Dataset& d) {
  const Eigen::VectorXd x = ml::pack(s);
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (ml_objective(ml::unpack(xp), d).lagrangian - ml_objective(ml::unpack(xm), d).lagrangian) / (2 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const MLState& s, const Dataset& d) {
  const Eigen::VectorXd x = ml::pack(s);
  Eigen::MatrixXd hess(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    hess.col(i) = (ml_kkt_system(ml::unpack(xp), d).gradient - ml_kkt_system(ml::unpack(xm), d).gradient) / (2 * h);
  }
  return hess;
}

}  // namespace

TEST_CASE("pack layout") {
  MLState s;
  s.t_matrix = UpperTriangular3({1, 2, 4, 3, 5, 6});
  s.offset = Vec3(7, 8, 9);
  s.field_dirs = {Vec3(10, 11, 12), Vec3(13, 14, 15)};
  s.lagrange = {16, 17};
  const Eigen::VectorXd x = ml::pack(s);
  REQUIRE(x.size() == 4 * 2 + 9);
  for (int i = 0; i < 17; ++i) CHECK(x(i) == i + 1);
  const MLState back = ml::unpack(x);
  CHECK(back.t_matrix == s.t_matrix);
  CHECK(back.field_dirs == s.field_dirs);
  CHECK(back.lagrange == s.lagrange);
  CHECK_THROWS_AS(ml::unpack(Eigen::VectorXd::Zero(12)), InputError);
}

TEST_CASE("objective examples") {
  const Dataset d = noisy_reference(3);
  const MLState init = initial_ml_state(initial_params(fit_ellipsoid(d).coeffs), d);
  const MLObjective obj = ml_objective(init, d);
  CHECK(obj.misfit <= 1e-18);

  std::mt19937_64 rng(41);
  Dataset sphere;
  MLState s;
  for (int k = 0; k < 10; ++k) {
    sphere.samples.push_back(random_unit(rng));
    s.field_dirs.push_back(sphere.samples.back());
    s.lagrange.push_back(0.5);
  }
  CHECK(ml_objective(s, sphere).misfit == 0.0);
  CHECK(ml_constraint_violation(s) <= 1e-15);
  CHECK(std::abs(ml_objective(s, sphere).lagrangian) <= 1e-14);

  s.lagrange.pop_back();
  CHECK_THROWS_AS(ml_objective(s, sphere), InputError);
  CHECK_THROWS_AS(ml_kkt_system(s, sphere), InputError);
}

TEST_CASE("KKT gradient and Hessian match finite differences") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const MLState s = random_state(rng, 5);
    const Dataset d = random_sphere_data(rng, CalibrationParams{random_upper(rng), random_vec(rng)}, 5);
    const KktSystem kkt = ml_kkt_system(s, d);
    CHECK(rel_err(kkt.gradient, fd_gradient(s, d)) <= 1e-6);
    const Eigen::MatrixXd dense = kkt.dense_hessian();
    CHECK((dense - fd_hessian(s, d)).norm() / std::max(1.0, dense.norm()) <= 1e-4);
    CHECK((dense - dense.transpose()).norm() <= 1e-12 * dense.norm());
  }
}

TEST_CASE("Hessian structure") {
  std::mt19937_64 rng(43);
  const std::size_t n = 7;
  MLState s = random_state(rng, n);
  const Dataset d = random_sphere_data(rng, CalibrationParams{}, n);
  const KktSystem kkt = ml_kkt_system(s, d);
  CHECK(kkt.head_hessian.block<3, 3>(6, 6) == Mat3(2.0 * static_cast<double>(n) * Mat3::Identity()));

  const Eigen::MatrixXd dense = kkt.dense_hessian();
  const Eigen::Index lam0 = 9 + 3 * static_cast<Eigen::Index>(n);
  // lambda couples to nothing but its own m
  CHECK(dense.block(0, lam0, 9, static_cast<Eigen::Index>(n)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dense.block(lam0, lam0, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)).cwiseAbs().maxCoeff() == 0.0);

  for (auto& m : s.field_dirs) m.normalize();
  const KktSystem unit = ml_kkt_system(s, d);
  CHECK(unit.gradient.tail(static_cast<Eigen::Index>(n)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("block elimination equals the dense Newton step") {
  std::mt19937_64 rng(44);
  for (std::size_t n : {5u, 10u, 30u}) {
    for (int trial = 0; trial < 10; ++trial) {
      const MLState s = random_state(rng, n);
      const Dataset d = random_sphere_data(rng, CalibrationParams{random_upper(rng), random_vec(rng)}, n);
      const KktSystem kkt = ml_kkt_system(s, d);
      const Eigen::VectorXd block = ml_block_newton_step(kkt);
      const Eigen::VectorXd dense = ml_dense_newton_step(kkt);
      CHECK((block - dense).cwiseAbs().maxCoeff() <= 1e-9 * dense.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("solve on the noisy reference scenario") {
  const Dataset d = noisy_reference(1);
  const MLState init = initial_ml_state(initial_params(fit_ellipsoid(d).coeffs), d);
  const MLSolveReport rep = solve_ml(d, init);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 5);
  CHECK(rep.objective_history.back() < 0.004);
  CHECK(rep.constraint_violation_history.back() <= 1e-8);
  CHECK(ml_constraint_violation(rep.final_state) <= 1e-8);
  CHECK(rep.objective_history.size() == rep.constraint_violation_history.size());
  CHECK(rep.objective_history.size() == rep.gradient_norm_history.size());
  CHECK(rep.objective_history.size() == static_cast<std::size_t>(rep.iterations) + 1);
  CHECK(ml_kkt_system(rep.final_state, d).gradient.norm() <= 1e-8 * (1 + rep.objective_history.back()));
  CHECK(rep.warnings.empty());
}

TEST_CASE("noise-free data started at the truth converges immediately") {
  const CalibrationParams truth = SimulationConfig::reference_scenario().truth.calibration();
  const Dataset d = noise_free_reference();
  const MLSolveReport rep = solve_ml(d, initial_ml_state(truth, d));
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(rep.objective_history.back() <= 1e-18);
}

TEST_CASE("ML and NM calibrations agree on noise-free data") {
  const Dataset d = noise_free_reference();
  const CalibrationParams init = initial_params(fit_ellipsoid(d).coeffs);
  const CalibrationParams nm = solve_nm(d, init).final_params;
  const MLSolveReport ml = solve_ml(d, initial_ml_state(init, d));
  for (const auto& y : d.samples) {
    const Vec3 a = apply_calibration(nm, y);
    const Vec3 b = ml.final_state.t_matrix.inverse() * (y - ml.final_state.offset);
    CHECK((a - b).norm() <= 1e-8);
  }
}

TEST_CASE("max_iterations bounds the solve") {
  const Dataset d = noisy_reference(2);
  const MLState init = initial_ml_state(initial_params(fit_ellipsoid(d).coeffs), d);
  SolveOptions o;
  o.max_iterations = 1;
  const MLSolveReport rep = solve_ml(d, init, o);
  CHECK(rep.iterations == 1);
  CHECK_FALSE(rep.converged);
}
