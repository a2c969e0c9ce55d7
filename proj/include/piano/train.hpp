#pragma once

#include <cstdint>
#include <functional>

#include "piano/model.hpp"

namespace piano {

struct LossBreakdown {
  double total = 0.0;
  double interior = 0.0;  // mean residual energy over the interior
  double boundary = 0.0;  // mean boundary energy (Dirichlet problems)
  double velocity = 0.0;  // wave velocity-IC energy
};

struct LossVars {
  Var total;
  LossBreakdown values;
};

/// Residual energy of a predicted field: the mean squared PDE residual over
/// every grid node, j = 0..M (the one-sided j = 0 row anchors the first
/// predicted step to the IC's time derivative), plus the boundary deviation
/// for Dirichlet problems and the one-sided velocity-IC term for the wave
/// benchmark.
LossVars piano_loss(const Var& field, const PdeProblem& problem,
                    const Grid& grid, const StencilSpec& spec,
                    double lambda_interior = 1.0,
                    double lambda_boundary = 1.0);

double cosine_lr(long iter, long total, double lr0, double lr_min);

/// Decoupled weight decay; beta1=0.9, beta2=0.999, eps=1e-8.
class AdamW {
 public:
  void step(std::map<std::string, Matrix>& params,
            const std::map<std::string, Matrix>& grads, double lr,
            double weight_decay);

 private:
  std::map<std::string, Matrix> m_, v_;
  long t_ = 0;
};

/// Scales gradients so the global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
double clip_global_norm(std::map<std::string, Matrix>& grads, double max_norm);

struct TrainConfig {
  int iterations = 20000;
  double lr = 3e-4;
  double lr_min = 0.0;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  double lambda_interior = 1.0;
  double lambda_boundary = 1.0;
  int fd_accuracy = 2;
  /// Spatial batch: contiguous window of nodes per iteration; 0 = all Nx.
  int batch = 0;
  std::uint64_t seed = 0;
  int log_every = 100;

  void validate() const;
};

struct LossRecord {
  int iteration;
  double lr;
  double total;
  double interior;
  double boundary;
};

struct TrainResult {
  PianoModel model;  // final parameters
  PianoModel best;   // lowest training loss, at logging granularity
  double best_loss = 0.0;
  std::vector<LossRecord> history;
  bool diverged = false;
  int diverged_at = -1;
  double last_finite_loss = 0.0;
};

using SnapshotFn = std::function<void(int iteration, const Matrix& field)>;

/// Per iteration: rollout, residual-energy loss, backward through time,
/// global norm clip, AdamW update, cosine schedule advance. `snapshot` is
/// invoked with a full-grid prediction after each iteration listed in
/// `snapshot_iters` (1-based).
TrainResult train(const PdeProblem& problem, const Grid& grid,
                  PianoModel model, const TrainConfig& config,
                  const SnapshotFn& snapshot = {},
                  const std::vector<int>& snapshot_iters = {});

}  // namespace piano
