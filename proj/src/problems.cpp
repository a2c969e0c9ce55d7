#include "piano/problems.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace piano {

namespace {
constexpr double kPi = std::numbers::pi;
}

Vector Grid::x_nodes() const {
  Vector x(nx);
  for (int i = 0; i < nx; ++i) x[i] = x_min + i * dx();
  return x;
}

Vector Grid::t_nodes() const {
  Vector t(m + 1);
  for (int j = 0; j <= m; ++j) t[j] = t_min + j * dt();
  return t;
}

Grid make_grid(double x_min, double x_max, double t_min, double t_max, int nx,
               int m, Topology topology) {
  if (x_max <= x_min || t_max <= t_min)
    throw ValueError("grid: degenerate domain bounds");
  if (nx < 4 || m < 4) throw ValueError("grid: requires Nx >= 4 and M >= 4");
  return Grid{x_min, x_max, t_min, t_max, nx, m, topology};
}

namespace {

StencilSpec time_spec(int derivative, const StencilSpec& spec) {
  return {derivative, spec.accuracy, BoundaryRule::OneSided};
}

StencilSpec space_spec(int derivative, const StencilSpec& spec,
                       Topology topology) {
  return {derivative, spec.accuracy,
          topology == Topology::Periodic ? BoundaryRule::PeriodicWrap
                                         : BoundaryRule::OneSided};
}

Var dirichlet_zero_rows(const Var& field, const Grid& grid) {
  return concat_rows({slice_rows(field, 0, 1),
                      slice_rows(field, grid.nx - 1, 1)});
}

void check_field(const Var& field, const Grid& grid) {
  if (field.rows() != grid.nx || field.cols() != grid.m + 1)
    throw ShapeError("residual: field does not match grid (" +
                     std::to_string(field.rows()) + "x" +
                     std::to_string(field.cols()) + " vs " +
                     std::to_string(grid.nx) + "x" +
                     std::to_string(grid.m + 1) + ")");
}

// Exact flow of u_t = 5u(1-u) applied pointwise.
Vector reaction_flow(const Vector& state, double dtau, const Grid&) {
  const double g = std::exp(5.0 * dtau);
  Vector out(state.size());
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double h = state[i];
    out[i] = h * g / (h * g + 1.0 - h);
  }
  return out;
}

// Circular shift by c*dtau via trigonometric interpolation; exact for
// states band-limited on the grid.
Vector convection_flow(const Vector& state, double dtau, const Grid& grid) {
  const int n = static_cast<int>(state.size());
  const double period = grid.x_max - grid.x_min;
  const double shift = 50.0 * dtau;
  using C = std::complex<double>;
  std::vector<C> f(n, C(0.0));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      f[k] += state[j] * std::polar(1.0, -2.0 * kPi * j * k / n);
  Vector out = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    C acc(0.0);
    for (int k = 0; k < n; ++k) {
      const int mode = (k <= n / 2) ? k : k - n;
      const double kappa = 2.0 * kPi * mode / period;
      C phase = (2 * k == n) ? C(std::cos(kappa * shift), 0.0)
                             : std::polar(1.0, -kappa * shift);
      acc += f[k] * phase * std::polar(1.0, 2.0 * kPi * j * k / n);
    }
    out[j] = acc.real() / n;
  }
  return out;
}

// Sine-series expansion with nx-2 interior modes, per-mode decay
// exp(-alpha (k pi)^2 dtau). Least-squares fit so off-grid (evaluation)
// nodes are handled too.
Vector heat_flow(const Vector& state, double dtau, const Grid& grid) {
  const int n = static_cast<int>(state.size());
  const int modes = n - 2;
  const Vector x = grid.x_nodes();
  Matrix basis(n, modes);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < modes; ++k)
      basis(i, k) = std::sin((k + 1) * kPi * x[i]);
  Vector coeff = basis.colPivHouseholderQr().solve(state);
  for (int k = 0; k < modes; ++k)
    coeff[k] *= std::exp(-0.1 * std::pow((k + 1) * kPi, 2) * dtau);
  return basis * coeff;
}

}  // namespace

PdeProblem make_wave() {
  PdeProblem p;
  p.name = "wave";
  p.x_min = 0.0; p.x_max = 1.0; p.t_min = 0.0; p.t_max = 1.0;
  p.bc = Topology::Dirichlet;
  p.has_velocity_ic = true;
  p.ic = [](double x) {
    return std::sin(kPi * x) + 0.5 * std::sin(3.0 * kPi * x);
  };
  p.analytical = [](double x, double t) {
    return std::sin(kPi * x) * std::cos(2.0 * kPi * t) +
           0.5 * std::sin(3.0 * kPi * x) * std::cos(6.0 * kPi * t);
  };
  p.residual = [](const Var& f, const Grid& g, const StencilSpec& spec) {
    check_field(f, g);
    Var utt = second_derivative(f, g.dt(), Axis::Time, time_spec(2, spec));
    Var uxx = second_derivative(f, g.dx(), Axis::Space,
                                space_spec(2, spec, g.topology));
    return sub(utt, scale(uxx, 4.0));
  };
  p.bc_residual = dirichlet_zero_rows;
  return p;
}

PdeProblem make_reaction() {
  PdeProblem p;
  p.name = "reaction";
  p.x_min = 0.0; p.x_max = 2.0 * kPi; p.t_min = 0.0; p.t_max = 1.0;
  p.bc = Topology::Periodic;
  p.ic = [](double x) {
    const double s = kPi / 4.0;
    return std::exp(-(x - kPi) * (x - kPi) / (2.0 * s * s));
  };
  p.analytical = [ic = p.ic](double x, double t) {
    const double h = ic(x);
    const double g = std::exp(5.0 * t);
    return h * g / (h * g + 1.0 - h);
  };
  p.residual = [](const Var& f, const Grid& g, const StencilSpec& spec) {
    check_field(f, g);
    Var ut = diff_time(f, g.dt(), time_spec(1, spec));
    return add(sub(ut, scale(f, 5.0)), scale(square(f), 5.0));
  };
  p.flow_oracle = reaction_flow;
  p.lipschitz = [](double dtau) { return std::exp(5.0 * dtau); };
  // d/du0 of the logistic flow is e^{r dtau} / (1 + u0 (e^{r dtau} - 1))^2,
  // decreasing in u0, so the supremum over [lo, hi] sits at lo. States at or
  // below -1/(e^{r dtau} - 1) blow up within the step: no finite constant.
  p.lipschitz_on = [](double dtau, double lo, double /*hi*/) {
    const double growth = std::exp(5.0 * dtau);
    const double denom = 1.0 + lo * (growth - 1.0);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return growth / (denom * denom);
  };
  return p;
}

PdeProblem make_convection() {
  PdeProblem p;
  p.name = "convection";
  p.x_min = 0.0; p.x_max = 2.0 * kPi; p.t_min = 0.0; p.t_max = 1.0;
  p.bc = Topology::Periodic;
  p.ic = [](double x) { return std::sin(x); };
  p.analytical = [](double x, double t) { return std::sin(x - 50.0 * t); };
  p.residual = [](const Var& f, const Grid& g, const StencilSpec& spec) {
    check_field(f, g);
    Var ut = diff_time(f, g.dt(), time_spec(1, spec));
    Var ux = diff_space(f, g.dx(), space_spec(1, spec, g.topology));
    return add(ut, scale(ux, 50.0));
  };
  p.flow_oracle = convection_flow;
  p.lipschitz = [](double) { return 1.0; };
  return p;
}

PdeProblem make_heat() {
  PdeProblem p;
  p.name = "heat";
  p.x_min = 0.0; p.x_max = 1.0; p.t_min = 0.0; p.t_max = 1.0;
  p.bc = Topology::Dirichlet;
  p.ic = [](double x) { return std::sin(kPi * x); };
  p.analytical = [](double x, double t) {
    return std::sin(kPi * x) * std::exp(-0.1 * kPi * kPi * t);
  };
  p.residual = [](const Var& f, const Grid& g, const StencilSpec& spec) {
    check_field(f, g);
    Var ut = diff_time(f, g.dt(), time_spec(1, spec));
    Var uxx = second_derivative(f, g.dx(), Axis::Space,
                                space_spec(2, spec, g.topology));
    return sub(ut, scale(uxx, 0.1));
  };
  p.bc_residual = dirichlet_zero_rows;
  p.flow_oracle = heat_flow;
  p.lipschitz = [](double dtau) {
    return std::exp(-0.1 * kPi * kPi * dtau);
  };
  return p;
}

PdeProblem problem_by_name(const std::string& name) {
  if (name == "wave") return make_wave();
  if (name == "reaction") return make_reaction();
  if (name == "convection") return make_convection();
  if (name == "heat") return make_heat();
  throw ValueError("unknown benchmark: " + name +
                   " (expected wave|reaction|convection|heat)");
}

SampledGrid sample_grid(const PdeProblem& problem, int nx, int m) {
  Grid grid = make_grid(problem.x_min, problem.x_max, problem.t_min,
                        problem.t_max, nx, m, problem.bc);
  SampledGrid out{grid, Vector(nx), analytical_field(problem, grid)};
  const Vector x = grid.x_nodes();
  for (int i = 0; i < nx; ++i) out.ic[i] = problem.ic(x[i]);
  return out;
}

Matrix analytical_field(const PdeProblem& problem, const Grid& grid) {
  const Vector x = grid.x_nodes();
  const Vector t = grid.t_nodes();
  Matrix f(grid.nx, grid.m + 1);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j <= grid.m; ++j) f(i, j) = problem.analytical(x[i], t[j]);
  return f;
}

Grid make_eval_grid(const PdeProblem& problem, const Grid& train) {
  const double dx = train.dx();
  const double dt = train.dt();
  Grid g;
  g.topology = train.topology;
  g.t_min = train.t_min + 0.5 * dt;
  g.m = train.m - 2;
  g.t_max = g.t_min + g.m * dt;
  if (train.topology == Topology::Periodic) {
    g.nx = train.nx;
    g.x_min = train.x_min + 0.5 * dx;
    g.x_max = g.x_min + g.nx * dx;
  } else {
    g.nx = train.nx - 2;
    g.x_min = train.x_min + 0.5 * dx;
    g.x_max = g.x_min + (g.nx - 1) * dx;
  }
  if (g.nx < 4 || g.m < 4)
    throw ValueError("eval grid: training grid too small to offset");
  (void)problem;
  return g;
}

}  // namespace piano
