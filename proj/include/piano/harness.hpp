#pragma once

#include "piano/metrics.hpp"
#include "piano/train.hpp"

namespace piano {

struct ExperimentSpec {
  std::string problem = "reaction";
  Backbone backbone = Backbone::Ssm;
  int fd_accuracy = 2;
  int k = 64;
  int nx = 50;
  int m = 50;
  int iterations = 20000;
  double lr = 3e-4;
  std::vector<std::uint64_t> seeds = {0, 1, 2};

  std::string label() const;
};

/// Desk-scale reaction matrix behind the backbone and FD-order ablations:
/// SSM / GRU / MLP / Non-AR at second order, plus SSM at first order.
std::vector<ExperimentSpec> default_ablation_matrix(int iterations = 20000,
                                                    int k = 64, int nx = 50,
                                                    int m = 50);

struct CellResult {
  ExperimentSpec spec;
  int seed_count = 0;
  int diverged_count = 0;
  double rmae_mean = 0.0, rmae_std = 0.0;
  double rrmse_mean = 0.0, rrmse_std = 0.0;
  std::vector<double> per_seed_rrmse;
};

using ProgressFn = std::function<void(const std::string& message)>;

/// Trains and evaluates every cell per seed; evaluation is a fresh rollout
/// on the half-spacing offset grid. Diverged runs are excluded from the
/// aggregates but counted.
std::vector<CellResult> run_matrix(const std::vector<ExperimentSpec>& specs,
                                   const ProgressFn& progress = {});

struct OrderingResult {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  double margin = 0.0;  // lhs - rhs; positive = expected ordering holds
  bool pass = false;
};

/// Checks the orderings the result set supports: Non-AR > MLP > GRU >= SSM,
/// FD order 1 > order 2, and monotone improvement over k and grid sweeps.
std::vector<OrderingResult> ordering_check(
    const std::vector<CellResult>& results);

std::string results_csv(const std::vector<CellResult>& results);

}  // namespace piano
