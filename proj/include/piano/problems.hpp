#pragma once

#include <functional>
#include <optional>
#include <string>

#include "piano/stencil.hpp"

namespace piano {

enum class Topology { Dirichlet, Periodic };

/// Uniform spatio-temporal grid. Periodic grids exclude the duplicate
/// endpoint node, so dx = (x_max - x_min) / nx there.
struct Grid {
  double x_min = 0.0, x_max = 1.0;
  double t_min = 0.0, t_max = 1.0;
  int nx = 0;  // spatial node count
  int m = 0;   // time-step count (m + 1 time nodes)
  Topology topology = Topology::Dirichlet;

  double dx() const {
    return topology == Topology::Periodic ? (x_max - x_min) / nx
                                          : (x_max - x_min) / (nx - 1);
  }
  double dt() const { return (t_max - t_min) / m; }
  Vector x_nodes() const;
  Vector t_nodes() const;
};

Grid make_grid(double x_min, double x_max, double t_min, double t_max, int nx,
               int m, Topology topology);

/// One benchmark: residual operator, IC/BC, analytical solution, and (where
/// the dynamics are first order in time) an exact one-step evolution oracle.
struct PdeProblem {
  std::string name;
  double x_min = 0.0, x_max = 1.0, t_min = 0.0, t_max = 1.0;
  Topology bc = Topology::Dirichlet;
  bool has_velocity_ic = false;  // wave: du/dt(x, 0) = 0

  std::function<double(double)> ic;                  // x -> u(x, t_min)
  std::function<double(double, double)> analytical;  // (x, t) -> u

  /// PDE residual over the full predicted grid, registered on the tape.
  std::function<Var(const Var& field, const Grid&, const StencilSpec&)>
      residual;
  /// Dirichlet problems: deviation of the boundary rows from the prescribed
  /// values, shape 2 x (M+1). Null for periodic problems.
  std::function<Var(const Var& field, const Grid&)> bc_residual;

  /// Exact evolution of a grid-sampled state by dtau. Null for wave
  /// (second order in time; excluded from the rollout-error diagnostic).
  std::function<Vector(const Vector& state, double dtau, const Grid&)>
      flow_oracle;
  /// Lipschitz constant of the evolution operator as a function of dtau,
  /// valid for states in the solution range.
  std::function<double(double)> lipschitz;
  /// Lipschitz constant over initial states in [lo, hi], for nonlinear flows
  /// whose expansion rate depends on the state (an arbitrary predicted field
  /// may leave the solution range, where the flat constant under-bounds).
  /// Null when `lipschitz` is valid for every state.
  std::function<double(double dtau, double lo, double hi)> lipschitz_on;
};

PdeProblem make_wave();
PdeProblem make_reaction();
PdeProblem make_convection();
PdeProblem make_heat();
PdeProblem problem_by_name(const std::string& name);

struct SampledGrid {
  Grid grid;
  Vector ic;     // u(x, t_min) at the spatial nodes
  Matrix truth;  // analytical field, nx x (m+1)
};
SampledGrid sample_grid(const PdeProblem& problem, int nx, int m);

Matrix analytical_field(const PdeProblem& problem, const Grid& grid);

/// Evaluation grid offset from the training grid by half-spacings.
/// Dirichlet: nx-2 interior midpoints; periodic: nx shifted nodes (the
/// periodic structure must be preserved for the spectral flow oracle).
/// Time: m-2 steps starting at t_min + dt/2.
Grid make_eval_grid(const PdeProblem& problem, const Grid& train);

}  // namespace piano
