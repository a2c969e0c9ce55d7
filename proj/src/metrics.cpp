#include "piano/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace piano {

namespace {

void check_shapes(const Matrix& pred, const Matrix& truth, const char* op) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ShapeError(std::string(op) + ": pred " + std::to_string(pred.rows()) +
                     "x" + std::to_string(pred.cols()) + " vs truth " +
                     std::to_string(truth.rows()) + "x" +
                     std::to_string(truth.cols()));
}

}  // namespace

double rmae(const Matrix& pred, const Matrix& truth) {
  check_shapes(pred, truth, "rmae");
  const double denom = truth.array().abs().sum();
  if (denom <= 0.0) throw ValueError("rmae: zero-magnitude truth");
  return (pred - truth).array().abs().sum() / denom;
}

double rrmse(const Matrix& pred, const Matrix& truth) {
  check_shapes(pred, truth, "rrmse");
  const double denom = truth.array().square().sum();
  if (denom <= 0.0) throw ValueError("rrmse: zero-magnitude truth");
  return std::sqrt((pred - truth).array().square().sum() / denom);
}

Vector step_errors(const Matrix& pred, const Matrix& truth, double dx) {
  check_shapes(pred, truth, "step_errors");
  Vector e(pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j)
    e[j] = std::sqrt(dx * (pred.col(j) - truth.col(j)).squaredNorm());
  return e;
}

Vector rollout_errors(const Matrix& pred, const PdeProblem& problem,
                      const Grid& grid) {
  if (!problem.flow_oracle)
    throw ValueError("rollout_errors: no flow oracle for " + problem.name);
  if (pred.rows() != grid.nx || pred.cols() != grid.m + 1)
    throw ShapeError("rollout_errors: field does not match grid");
  const double dt = grid.dt();
  const double dx = grid.dx();
  Vector delta(grid.m);
  for (int n = 0; n < grid.m; ++n) {
    Vector evolved = problem.flow_oracle(pred.col(n), dt, grid);
    delta[n] = std::sqrt(dx * (pred.col(n + 1) - evolved).squaredNorm());
  }
  return delta;
}

double oracle_tolerance(const PdeProblem& problem, const Grid& grid) {
  Vector delta = rollout_errors(analytical_field(problem, grid), problem, grid);
  return delta.maxCoeff();
}

BoundCheck check_bound(const Vector& e, const Vector& delta, double lipschitz,
                       double tol) {
  return check_bound(e, delta, Vector::Constant(delta.size(), lipschitz), tol);
}

BoundCheck check_bound(const Vector& e, const Vector& delta,
                       const Vector& lipschitz, double tol) {
  if (delta.size() + 1 != e.size() || lipschitz.size() != delta.size())
    throw ShapeError("check_bound: sequences misaligned");
  BoundCheck out;
  out.rhs.resize(delta.size());
  out.min_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index n = 0; n < delta.size(); ++n) {
    out.rhs[n] = lipschitz[n] * e[n] + delta[n];
    const double slack = out.rhs[n] - e[n + 1];
    out.min_slack = std::min(out.min_slack, slack);
    const bool ok = e[n + 1] <= out.rhs[n] + tol;
    out.per_step.push_back(ok);
    out.pass = out.pass && ok;
  }
  return out;
}

Vector lipschitz_factors(const Matrix& pred, const PdeProblem& problem,
                         const Grid& grid) {
  Vector l(grid.m);
  if (!problem.lipschitz_on) {
    l.setConstant(problem.lipschitz(grid.dt()));
    return l;
  }
  const Matrix truth = analytical_field(problem, grid);
  for (int n = 0; n < grid.m; ++n) {
    const double lo = std::min(pred.col(n).minCoeff(), truth.col(n).minCoeff());
    const double hi = std::max(pred.col(n).maxCoeff(), truth.col(n).maxCoeff());
    l[n] = problem.lipschitz_on(grid.dt(), lo, hi);
  }
  return l;
}

MetricsReport evaluate_field(const Matrix& pred, const PdeProblem& problem,
                             const Grid& grid) {
  const Matrix truth = analytical_field(problem, grid);
  MetricsReport r;
  r.rmae = rmae(pred, truth);
  r.rrmse = rrmse(pred, truth);
  r.per_step_error = step_errors(pred, truth, grid.dx());
  if (problem.flow_oracle) {
    r.has_delta = true;
    r.delta = rollout_errors(pred, problem, grid);
    r.max_delta = r.delta.maxCoeff();
    r.bound_checked = true;
    r.bound_tol = oracle_tolerance(problem, grid);
    BoundCheck bc = check_bound(r.per_step_error, r.delta,
                                lipschitz_factors(pred, problem, grid),
                                r.bound_tol);
    r.bound_pass = bc.pass;
    r.bound_slack = bc.min_slack;
  }
  return r;
}

MetricsReport evaluate(const PianoModel& model, const PdeProblem& problem,
                       const Grid& grid) {
  const Vector x = grid.x_nodes();
  Vector ic(grid.nx);
  for (int i = 0; i < grid.nx; ++i) ic[i] = problem.analytical(x[i], grid.t_min);
  return evaluate_field(rollout_field(model, grid, ic), problem, grid);
}

}  // namespace piano
