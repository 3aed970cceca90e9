#pragma once

#include "magcal/simulator.hpp"
#include "magcal/solve.hpp"
#include "magcal/types.hpp"

#include <string>
#include <vector>

namespace magcal {

/**
 * Constrained maximum-likelihood estimator.
 *
 * Minimizes sum_k |y_k - T m_k - h|^2 subject to |m_k| = 1 through the
 * Lagrangian L = sum_k |y_k - T m_k - h|^2 + lambda_k (|m_k|^2 - 1).
 *
 * The full unknown vector has dimension 4N+9 and is laid out as
 *   [t11 t12 t22 t13 t23 t33 | h1 h2 h3 | m_1 ... m_N | lambda_1 ... lambda_N]
 * with T's upper triangle column-stacked.
 */
namespace ml {

constexpr int kHeadSize = 9;

Eigen::VectorXd pack(const MLState& s);
MLState unpack(const Eigen::VectorXd& x);

}  // namespace ml

struct MLObjective {
  double misfit = 0;
  double lagrangian = 0;
};

/// Throws InputError when the state is not sized to the data.
MLObjective ml_objective(const MLState& state, const Dataset& data);

/// Largest |‖m_k‖^2 - 1| over the samples.
double ml_constraint_violation(const MLState& state);

/**
 * Gradient and arrowhead Hessian of the Lagrangian.
 *
 * Each per-sample block (m_k, lambda_k) couples only to the 9-dim (T, h) head,
 * and lambda_k couples to nothing but m_k.
 */
struct KktSystem {
  Eigen::VectorXd gradient;                        ///< 4N+9, layout of ml::pack
  Eigen::Matrix<double, 9, 9> head_hessian;        ///< (T, h) x (T, h)
  std::vector<Eigen::Matrix<double, 9, 3>> head_m; ///< (T, h) x m_k
  std::vector<Mat3> h_mm;                          ///< m_k x m_k
  std::vector<Vec3> h_mlambda;                     ///< m_k x lambda_k

  std::size_t samples() const { return h_mm.size(); }
  Eigen::MatrixXd dense_hessian() const;
};

KktSystem ml_kkt_system(const MLState& state, const Dataset& data);

/// Solves H d = g by eliminating every per-sample block onto the head, O(N).
/// Throws DecompositionError when a block or the reduced head system is singular.
Eigen::VectorXd ml_block_newton_step(const KktSystem& kkt);

/// Same step from the dense (4N+9)^2 Hessian. O(N^3); kept as a reference path.
Eigen::VectorXd ml_dense_newton_step(const KktSystem& kkt);

struct MLSolveReport {
  std::vector<double> objective_history;             ///< misfit, index 0 is the initial state
  std::vector<double> constraint_violation_history;  ///< max_k |‖m_k‖^2 - 1|
  std::vector<double> gradient_norm_history;         ///< Lagrangian gradient norm (exit test)
  int iterations = 0;
  bool converged = false;
  MLState final_state;
  std::vector<std::string> warnings;
};

using MlSolveFailure = SolveFailure<MLSolveReport>;

MLSolveReport solve_ml(const Dataset& data, const MLState& init, const SolveOptions& opts = {});

}  // namespace magcal
