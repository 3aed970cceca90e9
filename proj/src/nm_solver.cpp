#include "magcal/nm_solver.hpp"

#include <cmath>

namespace magcal {

void SolveOptions::validate() const {
  if (max_iterations <= 0 || !(objective_tolerance > 0) || !(step_tolerance > 0) || !(gradient_tolerance > 0)) {
    throw InputError("solve options must all be positive");
  }
}

namespace nm {

namespace {
// (row, col) of R for each of the six shape coordinates
constexpr int kRow[6] = {0, 0, 1, 0, 1, 2};
constexpr int kCol[6] = {0, 1, 1, 2, 2, 2};
}  // namespace

Vector pack(const CalibrationParams& p) {
  Vector x;
  for (int q = 0; q < 6; ++q) x(q) = p.shape(kRow[q], kCol[q]);
  x.tail<3>() = p.offset;
  return x;
}

CalibrationParams unpack(const Vector& x) {
  CalibrationParams p;
  p.shape = UpperTriangular3({x(0), x(1), x(3), x(2), x(4), x(5)});
  p.offset = x.tail<3>();
  return p;
}

}  // namespace nm

double nm_objective(const CalibrationParams& params, const Dataset& data) {
  double f = 0;
  for (const auto& y : data.samples) {
    const double r = 1.0 - (params.shape * (y - params.offset)).squaredNorm();
    f += r * r;
  }
  return f;
}

NmDerivatives nm_gradient_hessian(const CalibrationParams& params, const Dataset& data) {
  using nm::kCol;
  using nm::kRow;
  const Mat3 r = params.shape.matrix();
  const Mat3 rtr = r.transpose() * r;

  NmDerivatives d;
  d.gradient.setZero();
  d.hessian.setZero();

  for (const auto& y : data.samples) {
    const Vec3 u = y - params.offset;
    const Vec3 v = r * u;
    const Vec3 w = r.transpose() * v;  // R^T R u
    const double e = v.squaredNorm() - 1.0;

    // derivative of the residual norm |Ru|^2 w.r.t. each shape coordinate is 2 u_j v_i
    Eigen::Matrix<double, 6, 1> uv;
    for (int p = 0; p < 6; ++p) uv(p) = u(kCol[p]) * v(kRow[p]);

    d.gradient.head<6>() += e * uv;
    d.gradient.tail<3>() -= e * w;

    // shape-shape block: 2 (u u^T) (x) (v v^T) + e (u u^T) (x) I, reduced
    for (int p = 0; p < 6; ++p) {
      for (int q = p; q < 6; ++q) {
        double h = 2.0 * uv(p) * uv(q);
        if (kRow[p] == kRow[q]) h += e * u(kCol[p]) * u(kCol[q]);
        d.hessian(p, q) += h;
      }
    }
    // shape-offset block: -2 (u (x) v) w^T - e (I (x) v + u (x) R), reduced
    for (int p = 0; p < 6; ++p) {
      const int i = kRow[p], j = kCol[p];
      for (int m = 0; m < 3; ++m) {
        double h = -2.0 * uv(p) * w(m) - e * u(j) * r(i, m);
        if (j == m) h -= e * v(i);
        d.hessian(p, 6 + m) += h;
      }
    }
    // offset-offset block: e R^T R + 2 w w^T
    d.hessian.bottomRightCorner<3, 3>() += e * rtr + 2.0 * w * w.transpose();
  }

  d.gradient *= 4.0;
  d.hessian *= 4.0;
  // the loops above fill the upper triangle of the shape block only
  d.hessian.topLeftCorner<6, 6>() = d.hessian.topLeftCorner<6, 6>().selfadjointView<Eigen::Upper>();
  d.hessian.bottomLeftCorner<3, 6>() = d.hessian.topRightCorner<6, 3>().transpose();
  return d;
}

SolveReport solve_nm(const Dataset& data, const CalibrationParams& init, const SolveOptions& opts) {
  opts.validate();
  SolveReport report;
  report.final_params = init;

  double f = nm_objective(init, data);
  report.objective_history.push_back(f);
  if (!std::isfinite(f)) {
    throw NmSolveFailure(NmSolveFailure::Reason::non_finite, "NM objective is not finite at the initial estimate",
                         report);
  }

  nm::Vector x = nm::pack(init);
  while (report.iterations < opts.max_iterations) {
    const NmDerivatives d = nm_gradient_hessian(nm::unpack(x), data);
    if (!d.gradient.allFinite() || !d.hessian.allFinite()) {
      throw NmSolveFailure(NmSolveFailure::Reason::non_finite, "NM derivatives are not finite", report);
    }
    const Eigen::FullPivLU<nm::Matrix> lu(d.hessian);
    if (!lu.isInvertible()) {
      throw NmSolveFailure(NmSolveFailure::Reason::singular_system, "NM Hessian is singular", report);
    }
    const nm::Vector step = lu.solve(d.gradient);
    if (step.norm() <= opts.step_tolerance) {
      report.converged = true;
      break;
    }

    x -= step;
    ++report.iterations;
    report.final_params = nm::unpack(x);

    const double f_next = nm_objective(report.final_params, data);
    report.objective_history.push_back(f_next);
    if (!std::isfinite(f_next)) {
      throw NmSolveFailure(NmSolveFailure::Reason::non_finite, "NM objective diverged to a non-finite value",
                           report);
    }
    const double change = std::abs(f_next - f);
    f = f_next;
    if (change <= opts.objective_tolerance) {
      report.converged = true;
      break;
    }
  }
  return report;
}

}  // namespace magcal
