#pragma once

#include "magcal/simulator.hpp"
#include "magcal/solve.hpp"
#include "magcal/types.hpp"

#include <vector>

namespace magcal {

/**
 * Norm-based (quartic) estimator: minimize sum_k (1 - |R (y_k - h)|^2)^2 over
 * upper-triangular R and offset h.
 *
 * The parameter vector is x = [r11 r12 r22 r13 r23 r33 h1 h2 h3], i.e. the
 * column-stacked upper triangle of R followed by h.
 */
namespace nm {

using Vector = Eigen::Matrix<double, 9, 1>;
using Matrix = Eigen::Matrix<double, 9, 9>;

Vector pack(const CalibrationParams& p);
CalibrationParams unpack(const Vector& x);

}  // namespace nm

struct SolveReport {
  std::vector<double> objective_history;  ///< index 0 is the initial objective
  int iterations = 0;
  bool converged = false;
  CalibrationParams final_params;
};

using NmSolveFailure = SolveFailure<SolveReport>;

double nm_objective(const CalibrationParams& params, const Dataset& data);

struct NmDerivatives {
  nm::Vector gradient;
  nm::Matrix hessian;
};

NmDerivatives nm_gradient_hessian(const CalibrationParams& params, const Dataset& data);

/// Plain Newton iteration. Throws NmSolveFailure on a singular Hessian or a non-finite objective.
SolveReport solve_nm(const Dataset& data, const CalibrationParams& init, const SolveOptions& opts = {});

}  // namespace magcal
