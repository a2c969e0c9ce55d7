#pragma once

#include "piano/autodiff.hpp"

namespace piano {

enum class BoundaryRule { OneSided, PeriodicWrap };

struct StencilSpec {
  int derivative = 1;  // 1 or 2
  int accuracy = 2;    // 1 or 2
  BoundaryRule boundary = BoundaryRule::OneSided;
};

/// Sparse n x n differentiation matrix for a uniform 1-D grid with spacing h.
/// Second-order closures use one-sided 3-point (first derivative) and
/// 4-point (second derivative) stencils at non-periodic edges.
std::shared_ptr<const SpMat> make_derivative_op(int n, double h,
                                                const StencilSpec& spec);

/// Derivative along the time axis of an Nx x (M+1) field.
Var diff_time(const Var& field, double dt, const StencilSpec& spec);
/// Derivative along the spatial axis; PeriodicWrap closes the stencil.
Var diff_space(const Var& field, double dx, const StencilSpec& spec);

enum class Axis { Space, Time };
Var second_derivative(const Var& field, double step, Axis axis,
                      const StencilSpec& spec);

// Plain-matrix counterparts (no tape) for oracles and diagnostics.
Matrix diff_time(const Matrix& field, double dt, const StencilSpec& spec);
Matrix diff_space(const Matrix& field, double dx, const StencilSpec& spec);
Matrix second_derivative(const Matrix& field, double step, Axis axis,
                         const StencilSpec& spec);

}  // namespace piano
