#include "piano/stencil.hpp"

#include <vector>

namespace piano {

namespace {

void add_row(std::vector<Eigen::Triplet<double>>& trip, int row, int n,
             bool wrap, std::initializer_list<std::pair<int, double>> terms) {
  for (auto [off, c] : terms) {
    int col = row + off;
    if (wrap) col = ((col % n) + n) % n;
    trip.emplace_back(row, col, c);
  }
}

std::shared_ptr<const SpMat> first_derivative_op(int n, double h, int accuracy,
                                                 bool wrap) {
  std::vector<Eigen::Triplet<double>> trip;
  if (accuracy == 2) {
    if (!wrap && n < 3)
      throw ShapeError("first derivative (2nd order): need at least 3 nodes");
    if (wrap && n < 3)
      throw ShapeError("first derivative (periodic): need at least 3 nodes");
    const double c = 1.0 / (2.0 * h);
    for (int i = 0; i < n; ++i) {
      if (wrap || (i > 0 && i < n - 1)) {
        add_row(trip, i, n, wrap, {{-1, -c}, {1, c}});
      } else if (i == 0) {
        add_row(trip, i, n, wrap, {{0, -3.0 * c}, {1, 4.0 * c}, {2, -c}});
      } else {
        add_row(trip, i, n, wrap, {{0, 3.0 * c}, {-1, -4.0 * c}, {-2, c}});
      }
    }
  } else {
    if (n < 2) throw ShapeError("first derivative: need at least 2 nodes");
    const double c = 1.0 / h;
    for (int i = 0; i < n; ++i) {
      if (wrap || i < n - 1) {
        add_row(trip, i, n, wrap, {{0, -c}, {1, c}});
      } else {
        add_row(trip, i, n, wrap, {{-1, -c}, {0, c}});
      }
    }
  }
  auto op = std::make_shared<SpMat>(n, n);
  op->setFromTriplets(trip.begin(), trip.end());
  return op;
}

std::shared_ptr<const SpMat> second_derivative_op(int n, double h, bool wrap) {
  if ((!wrap && n < 4) || (wrap && n < 3))
    throw ShapeError("second derivative: too few nodes for the stencil");
  std::vector<Eigen::Triplet<double>> trip;
  const double c = 1.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    if (wrap || (i > 0 && i < n - 1)) {
      add_row(trip, i, n, wrap, {{-1, c}, {0, -2.0 * c}, {1, c}});
    } else if (i == 0) {
      add_row(trip, i, n, wrap,
              {{0, 2.0 * c}, {1, -5.0 * c}, {2, 4.0 * c}, {3, -c}});
    } else {
      add_row(trip, i, n, wrap,
              {{0, 2.0 * c}, {-1, -5.0 * c}, {-2, 4.0 * c}, {-3, -c}});
    }
  }
  auto op = std::make_shared<SpMat>(n, n);
  op->setFromTriplets(trip.begin(), trip.end());
  return op;
}

}  // namespace

std::shared_ptr<const SpMat> make_derivative_op(int n, double h,
                                                const StencilSpec& spec) {
  if (h <= 0.0) throw ValueError("stencil: step must be positive");
  if (spec.accuracy != 1 && spec.accuracy != 2)
    throw ValueError("stencil: accuracy order must be 1 or 2");
  const bool wrap = spec.boundary == BoundaryRule::PeriodicWrap;
  if (spec.derivative == 1)
    return first_derivative_op(n, h, spec.accuracy, wrap);
  if (spec.derivative == 2) return second_derivative_op(n, h, wrap);
  throw ValueError("stencil: derivative order must be 1 or 2");
}

Var diff_time(const Var& field, double dt, const StencilSpec& spec) {
  auto op = make_derivative_op(static_cast<int>(field.cols()), dt, spec);
  return linear_right(field, op);
}

Var diff_space(const Var& field, double dx, const StencilSpec& spec) {
  auto op = make_derivative_op(static_cast<int>(field.rows()), dx, spec);
  return linear_left(op, field);
}

Var second_derivative(const Var& field, double step, Axis axis,
                      const StencilSpec& spec) {
  StencilSpec s = spec;
  s.derivative = 2;
  return axis == Axis::Time ? diff_time(field, step, s)
                            : diff_space(field, step, s);
}

Matrix diff_time(const Matrix& field, double dt, const StencilSpec& spec) {
  auto op = make_derivative_op(static_cast<int>(field.cols()), dt, spec);
  return field * op->transpose();
}

Matrix diff_space(const Matrix& field, double dx, const StencilSpec& spec) {
  auto op = make_derivative_op(static_cast<int>(field.rows()), dx, spec);
  return (*op) * field;
}

Matrix second_derivative(const Matrix& field, double step, Axis axis,
                         const StencilSpec& spec) {
  StencilSpec s = spec;
  s.derivative = 2;
  return axis == Axis::Time ? diff_time(field, step, s)
                            : diff_space(field, step, s);
}

}  // namespace piano
