#include <doctest.h>

#include <cmath>
#include <numbers>

#include "piano/stencil.hpp"

using namespace piano;

namespace {

constexpr double kPi = std::numbers::pi;

Vector sample(int n, double h, double x0, const std::function<double(double)>& f) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = f(x0 + i * h);
  return v;
}

/// Max-norm error of the n-point derivative approximation of sin on [0, 1]
/// (one-sided closures) or of sin over a full period (periodic wrap).
double stencil_error(int n, const StencilSpec& spec) {
  const bool periodic = spec.boundary == BoundaryRule::PeriodicWrap;
  const double span = periodic ? 2.0 * kPi : 1.0;
  const double h = periodic ? span / n : span / (n - 1);
  auto op = make_derivative_op(n, h, spec);
  Vector u = sample(n, h, 0.0, [](double x) { return std::sin(x); });
  Vector exact(n);
  for (int i = 0; i < n; ++i) {
    const double x = i * h;
    exact[i] = spec.derivative == 1 ? std::cos(x) : -std::sin(x);
  }
  return ((*op) * u - exact).cwiseAbs().maxCoeff();
}

double measured_order(const StencilSpec& spec) {
  const double e1 = stencil_error(40, spec);
  const double e2 = stencil_error(80, spec);
  return std::log2(e1 / e2);
}

}  // namespace

TEST_CASE("stencils are exact on polynomials of matching degree") {
  const int n = 12;
  const double h = 0.31;
  // Second-order first derivative: exact on quadratics everywhere, including
  // the 3-point one-sided edge rows.
  {
    auto op = make_derivative_op(n, h, {1, 2, BoundaryRule::OneSided});
    Vector u = sample(n, h, -1.0, [](double x) { return 3 * x * x - 2 * x + 1; });
    Vector du = sample(n, h, -1.0, [](double x) { return 6 * x - 2; });
    CHECK(((*op) * u - du).cwiseAbs().maxCoeff() < 1e-10);
  }
  // First-order first derivative: exact on affine functions.
  {
    auto op = make_derivative_op(n, h, {1, 1, BoundaryRule::OneSided});
    Vector u = sample(n, h, 0.0, [](double x) { return 4 * x - 7; });
    CHECK((((*op) * u).array() - 4.0).abs().maxCoeff() < 1e-10);
  }
  // Second derivative: exact on cubics (central row and 4-point edges).
  {
    auto op = make_derivative_op(n, h, {2, 2, BoundaryRule::OneSided});
    Vector u = sample(n, h, 0.5, [](double x) { return x * x * x - x; });
    Vector ddu = sample(n, h, 0.5, [](double x) { return 6 * x; });
    CHECK(((*op) * u - ddu).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("periodic wrap closes the stencil without one-sided rows") {
  const int n = 64;
  const double h = 2.0 * kPi / n;
  auto op = make_derivative_op(n, h, {1, 2, BoundaryRule::PeriodicWrap});
  Vector u = sample(n, h, 0.0, [](double x) { return std::sin(x); });
  Vector du = sample(n, h, 0.0, [](double x) { return std::cos(x); });
  CHECK(((*op) * u - du).cwiseAbs().maxCoeff() < 2e-3);  // h^2/6 ~ 1.6e-3
  // Every row of a periodic central-difference operator sums to zero and
  // has the same number of entries.
  Matrix dense = Matrix(*op);
  CHECK(dense.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(dense(0, n - 1) != 0.0);  // wraps around
}

TEST_CASE("measured convergence orders sit in the expected windows") {
  CHECK(measured_order({1, 2, BoundaryRule::OneSided}) ==
        doctest::Approx(2.0).epsilon(0.1));
  CHECK(measured_order({2, 2, BoundaryRule::OneSided}) ==
        doctest::Approx(2.0).epsilon(0.1));
  CHECK(measured_order({1, 1, BoundaryRule::OneSided}) ==
        doctest::Approx(1.0).epsilon(0.2));
  CHECK(measured_order({1, 2, BoundaryRule::PeriodicWrap}) ==
        doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("diff_time and diff_space apply the operator along the right axis") {
  const int nx = 9, m = 7;
  const double dx = 0.1, dt = 0.05;
  Matrix field(nx, m + 1);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j <= m; ++j)
      field(i, j) = std::sin(i * dx) * std::exp(-0.3 * j * dt);
  const StencilSpec spec{1, 2, BoundaryRule::OneSided};

  Matrix dxf = diff_space(field, dx, spec);
  Matrix dtf = diff_time(field, dt, spec);
  auto op_x = make_derivative_op(nx, dx, spec);
  auto op_t = make_derivative_op(m + 1, dt, spec);
  CHECK((dxf - Matrix((*op_x) * field)).norm() < 1e-12);
  CHECK((dtf - Matrix(field * Matrix(*op_t).transpose())).norm() < 1e-12);

  // Var overloads agree with the plain-matrix versions.
  Tape t;
  Var vf = t.leaf(field);
  CHECK((diff_space(vf, dx, spec).value() - dxf).norm() < 1e-12);
  CHECK((diff_time(vf, dt, spec).value() - dtf).norm() < 1e-12);
  CHECK((second_derivative(vf, dx, Axis::Space, spec).value() -
         second_derivative(field, dx, Axis::Space, spec)).norm() < 1e-12);
}

TEST_CASE("derivative gradients flow through the transpose map") {
  // d/du of sum(D u) is D^T 1: verify against an explicit dense transpose.
  const int n = 10;
  const double h = 0.2;
  const StencilSpec spec{1, 2, BoundaryRule::OneSided};
  Tape t;
  Matrix u = Vector::LinSpaced(n, 0.0, 1.0).array().sin().matrix();
  Var vu = t.leaf(u);
  Var loss = sum(diff_space(vu, h, spec));
  t.backward(loss);
  Matrix dense = Matrix(*make_derivative_op(n, h, spec));
  Vector expected = dense.transpose() * Vector::Ones(n);
  CHECK((t.grad(vu) - Matrix(expected)).norm() < 1e-12);
}

TEST_CASE("invalid stencil requests are rejected") {
  CHECK_THROWS_AS((void)make_derivative_op(3, 0.1, {2, 2, BoundaryRule::OneSided}),
                  ShapeError);
  CHECK_THROWS_AS((void)make_derivative_op(8, 0.0, {1, 2, BoundaryRule::OneSided}),
                  ValueError);
  CHECK_THROWS_AS((void)make_derivative_op(8, 0.1, {3, 2, BoundaryRule::OneSided}),
                  ValueError);
}
