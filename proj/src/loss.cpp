#include "piano/train.hpp"

namespace piano {

LossVars piano_loss(const Var& field, const PdeProblem& problem,
                    const Grid& grid, const StencilSpec& spec,
                    double lambda_interior, double lambda_boundary) {
  const int m = grid.m;

  // All time rows participate, including j = 0: the one-sided row there
  // pins the first predicted step to the IC's time derivative. Without it
  // the interior central differences admit a spurious alternating-sign
  // solution (the leapfrog scheme's computational mode) with near-zero
  // residual that tracks nothing.
  Var residual = problem.residual(field, grid, spec);
  Var interior = mean_all(square(residual));
  Var total = scale(interior, lambda_interior);

  LossBreakdown values;
  values.interior = interior.value()(0, 0);

  if (problem.bc_residual && grid.topology == Topology::Dirichlet) {
    Var rows = problem.bc_residual(field, grid);
    Var boundary = mean_all(square(slice_cols(rows, 1, m)));
    values.boundary = boundary.value()(0, 0);
    total = add(total, scale(boundary, lambda_boundary));
  }

  if (problem.has_velocity_ic) {
    // One-sided second-order du/dt at t_0, driven to zero.
    const double c = 1.0 / (2.0 * grid.dt());
    Var v = add(scale(slice_cols(field, 0, 1), -3.0 * c),
                add(scale(slice_cols(field, 1, 1), 4.0 * c),
                    scale(slice_cols(field, 2, 1), -c)));
    Var vel = mean_all(square(v));
    values.velocity = vel.value()(0, 0);
    total = add(total, scale(vel, lambda_interior));
  }

  values.total = total.value()(0, 0);
  return {total, values};
}

}  // namespace piano
