#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "piano/problems.hpp"

namespace piano {

enum class Backbone { Ssm, Gru, Mlp, NonAr };

Backbone backbone_by_name(const std::string& name);
std::string to_string(Backbone backbone);

/// Embedding p, transition backbone f, probe q. Parameters are named
/// matrices; the ordering of `param_names()` is the canonical traversal
/// order for gradients and optimizer state.
struct PianoModel {
  Backbone backbone = Backbone::Ssm;
  int k = 256;  // state dimension
  int d = 2;    // coordinate dimension (x, t)
  int l = 1;    // solution dimension

  std::map<std::string, Matrix> params;

  int input_dim() const { return backbone == Backbone::NonAr ? d : d + l; }
  std::vector<std::string> param_names() const;
};

/// Xavier-uniform weights, zero biases, unit LayerNorm gains.
PianoModel make_model(Backbone backbone, int k, std::uint64_t seed);

long parameter_count(const PianoModel& model);

struct RolloutOptions {
  /// Perturbation added to the prediction at this time index (and fed into
  /// the next step for AR backbones). -1 disables.
  int perturb_step = -1;
  Vector perturbation;
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(int step)
      : std::runtime_error("rollout diverged (non-finite values) at step " +
                           std::to_string(step)),
        step(step) {}
  int step;
};

struct RolloutResult {
  Var field;      // nx x (m+1); column 0 is the anchored IC
  Matrix hidden;  // final hidden state (diagnostic; empty for Non-AR)
  std::map<std::string, Var> param_vars;  // tape leaves, for gradient lookup
};

/// Autoregressive rollout over the grid, recorded on `tape` so gradients
/// flow through every predicted column back to the sequence start.
RolloutResult rollout(Tape& tape, const PianoModel& model, const Grid& grid,
                      const Vector& ic, const RolloutOptions& opts = {});

/// Forward-only convenience wrapper.
Matrix rollout_field(const PianoModel& model, const Grid& grid,
                     const Vector& ic, const RolloutOptions& opts = {});

}  // namespace piano
