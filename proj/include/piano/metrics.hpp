#pragma once

#include "piano/model.hpp"

namespace piano {

/// rMAE = sum |pred - truth| / sum |truth|, over all evaluation nodes.
double rmae(const Matrix& pred, const Matrix& truth);
/// rRMSE = sqrt(sum |pred - truth|^2 / sum |truth|^2).
double rrmse(const Matrix& pred, const Matrix& truth);

/// Discrete L2 norm sqrt(dx * sum_x e^2) of the error per time index.
Vector step_errors(const Matrix& pred, const Matrix& truth, double dx);

/// delta_n = || pred(:, n+1) - G(dt)[pred(:, n)] ||, n = 0..M-1.
/// Requires a flow oracle (reaction, heat, convection).
Vector rollout_errors(const Matrix& pred, const PdeProblem& problem,
                      const Grid& grid);

/// Measured oracle residual on the analytical field: how far the numerical
/// flow oracle is from the exact semigroup on this grid. Used as the bound
/// check tolerance.
double oracle_tolerance(const PdeProblem& problem, const Grid& grid);

struct BoundCheck {
  bool pass = true;
  double min_slack = 0.0;  // min over n of L*e_n + delta_n - e_{n+1}
  std::vector<bool> per_step;
  Vector rhs;  // L*e_n + delta_n
};

/// Verifies e_{n+1} <= L * e_n + delta_n + tol for every step.
BoundCheck check_bound(const Vector& e, const Vector& delta, double lipschitz,
                       double tol);

/// Same with a per-step Lipschitz factor L_n (size = delta size).
BoundCheck check_bound(const Vector& e, const Vector& delta,
                       const Vector& lipschitz, double tol);

/// Per-step Lipschitz factors for comparing `pred` against the analytical
/// field: the problem's state-dependent bound evaluated on the hull of the
/// two fields at each step, or the flat constant when no state-dependent
/// bound is defined.
Vector lipschitz_factors(const Matrix& pred, const PdeProblem& problem,
                         const Grid& grid);

struct MetricsReport {
  double rmae = 0.0;
  double rrmse = 0.0;
  Vector per_step_error;  // ||e_n||, n = 0..M
  bool has_delta = false;
  Vector delta;           // delta_n, n = 0..M-1
  double max_delta = 0.0;
  bool bound_checked = false;
  bool bound_pass = true;
  double bound_slack = 0.0;
  double bound_tol = 0.0;
};

/// Fresh rollout on `grid` (re-anchored at the true IC sampled there),
/// compared against the analytical solution; runs the error-propagation
/// diagnostic when the problem has a flow oracle.
MetricsReport evaluate(const PianoModel& model, const PdeProblem& problem,
                       const Grid& grid);

/// Metrics for an externally produced field on `grid`.
MetricsReport evaluate_field(const Matrix& pred, const PdeProblem& problem,
                             const Grid& grid);

}  // namespace piano
