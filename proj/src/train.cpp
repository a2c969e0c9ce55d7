#include "piano/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace piano {

double cosine_lr(long iter, long total, double lr0, double lr_min) {
  if (iter < 0 || iter > total) throw ValueError("cosine_lr: iter out of range");
  return lr_min + 0.5 * (lr0 - lr_min) *
                      (1.0 + std::cos(std::numbers::pi * iter / total));
}

void AdamW::step(std::map<std::string, Matrix>& params,
                 const std::map<std::string, Matrix>& grads, double lr,
                 double weight_decay) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, t_);
  const double bc2 = 1.0 - std::pow(beta2, t_);
  for (auto& [name, p] : params) {
    const Matrix& g = grads.at(name);
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw ShapeError("adamw: gradient shape mismatch for " + name);
    Matrix& m =
        m_.try_emplace(name, Matrix::Zero(p.rows(), p.cols())).first->second;
    Matrix& v =
        v_.try_emplace(name, Matrix::Zero(p.rows(), p.cols())).first->second;
    p -= lr * weight_decay * p;  // decoupled decay
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + eps);
  }
}

double clip_global_norm(std::map<std::string, Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& entry : grads) sq += entry.second.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& entry : grads) entry.second *= s;
  }
  return norm;
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ValueError("config: iterations must be >= 0");
  if (lr <= 0.0) throw ValueError("config: lr must be positive");
  if (clip_norm <= 0.0) throw ValueError("config: clip_norm must be positive");
  if (lambda_interior < 0.0 || lambda_boundary < 0.0)
    throw ValueError("config: loss weights must be >= 0");
  if (fd_accuracy != 1 && fd_accuracy != 2)
    throw ValueError("config: fd_accuracy must be 1 or 2");
}

namespace {

struct Window {
  Grid grid;
  Vector ic;
  bool left_boundary = true;
  bool right_boundary = true;
};

Window full_window(const PdeProblem& problem, const Grid& grid) {
  Window w{grid, Vector(grid.nx)};
  const Vector x = grid.x_nodes();
  for (int i = 0; i < grid.nx; ++i)
    w.ic[i] = problem.analytical(x[i], grid.t_min);
  return w;
}

// Contiguous spatial window; stencils fall back to one-sided closures at
// the window edges, which keeps the accuracy order.
Window sub_window(const Window& full, int i0, int batch) {
  Window w;
  w.grid = full.grid;
  w.grid.topology = Topology::Dirichlet;
  w.grid.x_min = full.grid.x_min + i0 * full.grid.dx();
  w.grid.x_max = w.grid.x_min + (batch - 1) * full.grid.dx();
  w.grid.nx = batch;
  w.ic = full.ic.segment(i0, batch);
  w.left_boundary = i0 == 0 && full.grid.topology == Topology::Dirichlet;
  w.right_boundary = i0 + batch == full.grid.nx &&
                     full.grid.topology == Topology::Dirichlet;
  return w;
}

LossVars window_loss(const Var& field, const PdeProblem& problem,
                     const Window& w, const StencilSpec& spec,
                     const TrainConfig& cfg) {
  if (w.left_boundary && w.right_boundary)
    return piano_loss(field, problem, w.grid, spec, cfg.lambda_interior,
                      cfg.lambda_boundary);
  // Window without both physical boundaries: keep only the rows present.
  PdeProblem p = problem;
  if (!w.left_boundary && !w.right_boundary) {
    p.bc_residual = nullptr;
  } else if (p.bc_residual) {
    const bool left = w.left_boundary;
    p.bc_residual = [left](const Var& f, const Grid& g) {
      return left ? slice_rows(f, 0, 1) : slice_rows(f, g.nx - 1, 1);
    };
  }
  return piano_loss(field, p, w.grid, spec, cfg.lambda_interior,
                    cfg.lambda_boundary);
}

}  // namespace

TrainResult train(const PdeProblem& problem, const Grid& grid,
                  PianoModel model, const TrainConfig& config,
                  const SnapshotFn& snapshot,
                  const std::vector<int>& snapshot_iters) {
  config.validate();
  const StencilSpec spec{1, config.fd_accuracy, BoundaryRule::OneSided};
  const Window full = full_window(problem, grid);
  const int batch =
      (config.batch > 0 && config.batch < grid.nx) ? config.batch : grid.nx;

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  AdamW opt;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int it = 0; it < config.iterations; ++it) {
    const double lr_t =
        cosine_lr(it, config.iterations, config.lr, config.lr_min);

    Window w = full;
    if (batch < grid.nx) {
      std::uniform_int_distribution<int> start(0, grid.nx - batch);
      w = sub_window(full, start(rng), batch);
    }

    Tape tape;
    LossVars loss;
    try {
      RolloutResult ro = rollout(tape, model, w.grid, w.ic);
      loss = window_loss(ro.field, problem, w, spec, config);
      if (!std::isfinite(loss.values.total)) throw DivergenceError(-1);

      const bool logged = config.log_every > 0 &&
                          (it % config.log_every == 0 ||
                           it == config.iterations - 1);
      if (logged) {
        result.history.push_back({it, lr_t, loss.values.total,
                                  loss.values.interior, loss.values.boundary});
        if (loss.values.total < result.best_loss) {
          result.best_loss = loss.values.total;
          result.best = model;  // parameters that produced this loss
        }
      }

      tape.backward(loss.total);
      std::map<std::string, Matrix> grads;
      for (const auto& [name, var] : ro.param_vars)
        grads[name] = tape.grad(var);
      clip_global_norm(grads, config.clip_norm);
      opt.step(model.params, grads, lr_t, config.weight_decay);
    } catch (const DivergenceError&) {
      result.diverged = true;
      result.diverged_at = it;
      result.model = model;
      return result;
    }
    result.last_finite_loss = loss.values.total;
    if (snapshot && std::find(snapshot_iters.begin(), snapshot_iters.end(),
                              it + 1) != snapshot_iters.end()) {
      snapshot(it + 1, rollout_field(model, grid, full.ic));
    }
  }

  result.model = model;
  if (!std::isfinite(result.best_loss)) result.best = result.model;
  return result;
}

}  // namespace piano
