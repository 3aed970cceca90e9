#pragma once

#include "magcal/types.hpp"

#include <string>
#include <utility>

namespace magcal {

struct SolveOptions {
  int max_iterations = 50;
  /// Absolute change of the objective between iterations (NM exit test).
  double objective_tolerance = 1e-12;
  /// Norm of the Newton step (both solvers).
  double step_tolerance = 1e-10;
  /// Norm of the Lagrangian gradient (ML exit test).
  double gradient_tolerance = 1e-9;

  void validate() const;
};

/// Raised when a Newton iteration cannot continue. Carries the report up to the failure.
template <class Report>
class SolveFailure : public Error {
 public:
  enum class Reason { singular_system, non_finite };

  SolveFailure(Reason reason, const std::string& what, Report report)
      : Error(what), reason_(reason), report_(std::move(report)) {}

  Reason reason() const { return reason_; }
  const Report& report() const { return report_; }

 private:
  Reason reason_;
  Report report_;
};

}  // namespace magcal
