#include "magcal/ml_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magcal {

namespace {

// (row, col) of T for each of the six shape coordinates, column-stacked
constexpr int kRow[6] = {0, 0, 1, 0, 1, 2};
constexpr int kCol[6] = {0, 1, 1, 2, 2, 2};

void check_sizes(const MLState& state, const Dataset& data) {
  if (state.field_dirs.size() != data.size() || state.lagrange.size() != data.size()) {
    throw InputError("ML state is not sized to the dataset (" + std::to_string(state.field_dirs.size()) + "/" +
                     std::to_string(state.lagrange.size()) + " vs " + std::to_string(data.size()) + ")");
  }
}

using Block4 = Eigen::Matrix4d;

Block4 sample_block(const KktSystem& kkt, std::size_t k) {
  Block4 b = Block4::Zero();
  b.topLeftCorner<3, 3>() = kkt.h_mm[k];
  b.topRightCorner<3, 1>() = kkt.h_mlambda[k];
  b.bottomLeftCorner<1, 3>() = kkt.h_mlambda[k].transpose();
  return b;
}

}  // namespace

namespace ml {

Eigen::VectorXd pack(const MLState& s) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::VectorXd x(4 * n + kHeadSize);
  for (int q = 0; q < 6; ++q) x(q) = s.t_matrix(kRow[q], kCol[q]);
  x.segment<3>(6) = s.offset;
  for (Eigen::Index k = 0; k < n; ++k) {
    x.segment<3>(kHeadSize + 3 * k) = s.field_dirs[k];
    x(kHeadSize + 3 * n + k) = s.lagrange[k];
  }
  return x;
}

MLState unpack(const Eigen::VectorXd& x) {
  if (x.size() < kHeadSize || (x.size() - kHeadSize) % 4 != 0) {
    throw InputError("ML vector has an invalid length");
  }
  const Eigen::Index n = (x.size() - kHeadSize) / 4;
  MLState s;
  s.t_matrix = UpperTriangular3({x(0), x(1), x(3), x(2), x(4), x(5)});
  s.offset = x.segment<3>(6);
  s.field_dirs.resize(n);
  s.lagrange.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    s.field_dirs[k] = x.segment<3>(kHeadSize + 3 * k);
    s.lagrange[k] = x(kHeadSize + 3 * n + k);
  }
  return s;
}

}  // namespace ml

MLObjective ml_objective(const MLState& state, const Dataset& data) {
  check_sizes(state, data);
  MLObjective obj;
  double penalty = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Vec3& m = state.field_dirs[k];
    obj.misfit += (data.samples[k] - state.t_matrix * m - state.offset).squaredNorm();
    penalty += state.lagrange[k] * (m.squaredNorm() - 1.0);
  }
  obj.lagrangian = obj.misfit + penalty;
  return obj;
}

double ml_constraint_violation(const MLState& state) {
  double worst = 0;
  for (const auto& m : state.field_dirs) worst = std::max(worst, std::abs(m.squaredNorm() - 1.0));
  return worst;
}

KktSystem ml_kkt_system(const MLState& state, const Dataset& data) {
  check_sizes(state, data);
  const std::size_t n = data.size();
  const auto nn = static_cast<Eigen::Index>(n);
  const Mat3 t = state.t_matrix.matrix();
  const Mat3 ttt = t.transpose() * t;

  KktSystem kkt;
  kkt.gradient = Eigen::VectorXd::Zero(4 * nn + ml::kHeadSize);
  kkt.head_hessian.setZero();
  kkt.head_m.resize(n);
  kkt.h_mm.resize(n);
  kkt.h_mlambda.resize(n);

  Eigen::Matrix<double, 6, 6> h_tt = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 3> h_th = Eigen::Matrix<double, 6, 3>::Zero();

  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const Vec3& m = state.field_dirs[k];
    const double lambda = state.lagrange[k];
    const Vec3 r = data.samples[k] - state.offset - t * m;

    for (int p = 0; p < 6; ++p) kkt.gradient(p) -= 2.0 * m(kCol[p]) * r(kRow[p]);
    kkt.gradient.segment<3>(6) -= 2.0 * r;
    kkt.gradient.segment<3>(ml::kHeadSize + 3 * kk) = -2.0 * t.transpose() * r + 2.0 * lambda * m;
    kkt.gradient(ml::kHeadSize + 3 * nn + kk) = m.squaredNorm() - 1.0;

    // 2 (m m^T) (x) I and 2 (m (x) I), reduced to the free entries of T
    for (int p = 0; p < 6; ++p) {
      for (int q = 0; q < 6; ++q) {
        if (kRow[p] == kRow[q]) h_tt(p, q) += 2.0 * m(kCol[p]) * m(kCol[q]);
      }
      h_th(p, kRow[p]) += 2.0 * m(kCol[p]);
    }

    // 2 ((m (x) I) T - I (x) r) and 2 T
    Eigen::Matrix<double, 9, 3> c;
    for (int p = 0; p < 6; ++p) {
      const int i = kRow[p], j = kCol[p];
      for (int col = 0; col < 3; ++col) {
        c(p, col) = 2.0 * (m(j) * t(i, col) - (j == col ? r(i) : 0.0));
      }
    }
    c.bottomRows<3>() = 2.0 * t;
    kkt.head_m[k] = c;

    kkt.h_mm[k] = 2.0 * ttt + 2.0 * lambda * Mat3::Identity();
    kkt.h_mlambda[k] = 2.0 * m;
  }

  kkt.head_hessian.topLeftCorner<6, 6>() = h_tt;
  kkt.head_hessian.topRightCorner<6, 3>() = h_th;
  kkt.head_hessian.bottomLeftCorner<3, 6>() = h_th.transpose();
  kkt.head_hessian.bottomRightCorner<3, 3>() = 2.0 * static_cast<double>(n) * Mat3::Identity();
  return kkt;
}

Eigen::MatrixXd KktSystem::dense_hessian() const {
  const auto n = static_cast<Eigen::Index>(samples());
  const Eigen::Index dim = 4 * n + ml::kHeadSize;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  h.topLeftCorner<9, 9>() = head_hessian;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index mi = ml::kHeadSize + 3 * k;
    const Eigen::Index li = ml::kHeadSize + 3 * n + k;
    h.block<9, 3>(0, mi) = head_m[k];
    h.block<3, 9>(mi, 0) = head_m[k].transpose();
    h.block<3, 3>(mi, mi) = h_mm[k];
    h.block<3, 1>(mi, li) = h_mlambda[k];
    h.block<1, 3>(li, mi) = h_mlambda[k].transpose();
  }
  return h;
}

Eigen::VectorXd ml_block_newton_step(const KktSystem& kkt) {
  const std::size_t n = kkt.samples();
  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd& g = kkt.gradient;

  // per-sample solves against [coupling^T | g_k]: 9 coupling columns plus the rhs
  std::vector<Eigen::Matrix<double, 4, 10>> solved(n);
  Eigen::Matrix<double, 9, 9> schur = kkt.head_hessian;
  Eigen::Matrix<double, 9, 1> rhs = g.head<9>();

  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const Eigen::FullPivLU<Block4> lu(sample_block(kkt, k));
    if (!lu.isInvertible()) {
      throw DecompositionError("ML per-sample KKT block " + std::to_string(k) + " is singular");
    }
    Eigen::Matrix<double, 4, 10> b = Eigen::Matrix<double, 4, 10>::Zero();
    b.topLeftCorner<3, 9>() = kkt.head_m[k].transpose();
    b.block<3, 1>(0, 9) = g.segment<3>(ml::kHeadSize + 3 * kk);
    b(3, 9) = g(ml::kHeadSize + 3 * nn + kk);
    solved[k] = lu.solve(b);

    // only the m rows of the coupling are nonzero
    schur.noalias() -= kkt.head_m[k] * solved[k].topLeftCorner<3, 9>();
    rhs.noalias() -= kkt.head_m[k] * solved[k].block<3, 1>(0, 9);
  }

  const Eigen::FullPivLU<Eigen::Matrix<double, 9, 9>> head_lu(schur);
  if (!head_lu.isInvertible()) {
    throw DecompositionError("ML reduced head system is singular");
  }

  Eigen::VectorXd step(g.size());
  const Eigen::Matrix<double, 9, 1> d_head = head_lu.solve(rhs);
  step.head<9>() = d_head;
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const Eigen::Vector4d d = solved[k].col(9) - solved[k].leftCols<9>() * d_head;
    step.segment<3>(ml::kHeadSize + 3 * kk) = d.head<3>();
    step(ml::kHeadSize + 3 * nn + kk) = d(3);
  }
  return step;
}

Eigen::VectorXd ml_dense_newton_step(const KktSystem& kkt) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt.dense_hessian());
  if (!(lu.rcond() > std::numeric_limits<double>::epsilon())) {
    throw DecompositionError("ML dense Hessian is singular");
  }
  return lu.solve(kkt.gradient);
}

MLSolveReport solve_ml(const Dataset& data, const MLState& init, const SolveOptions& opts) {
  opts.validate();
  check_sizes(init, data);

  MLSolveReport report;
  report.final_state = init;
  Eigen::VectorXd x = ml::pack(init);

  const auto record = [&](const MLState& s) {
    report.objective_history.push_back(ml_objective(s, data).misfit);
    report.constraint_violation_history.push_back(ml_constraint_violation(s));
  };
  record(init);

  while (true) {
    const KktSystem kkt = ml_kkt_system(report.final_state, data);
    const double gnorm = kkt.gradient.norm();
    report.gradient_norm_history.push_back(gnorm);
    if (!std::isfinite(gnorm) || !std::isfinite(report.objective_history.back())) {
      throw MlSolveFailure(MlSolveFailure::Reason::non_finite, "ML iterate is not finite", report);
    }
    if (gnorm <= opts.gradient_tolerance) {
      report.converged = true;
      break;
    }
    if (report.iterations >= opts.max_iterations) break;

    Eigen::VectorXd step;
    try {
      step = ml_block_newton_step(kkt);
    } catch (const DecompositionError& e) {
      throw MlSolveFailure(MlSolveFailure::Reason::singular_system, e.what(), report);
    }
    x -= step;
    ++report.iterations;
    report.final_state = ml::unpack(x);
    record(report.final_state);

    if (step.norm() <= opts.step_tolerance) {
      report.converged = std::isfinite(x.norm());
      report.gradient_norm_history.push_back(ml_kkt_system(report.final_state, data).gradient.norm());
      break;
    }
  }

  if (!report.final_state.t_matrix.has_positive_diagonal()) {
    report.warnings.push_back("estimated T has a non-positive diagonal entry");
  }
  return report;
}

}  // namespace magcal
