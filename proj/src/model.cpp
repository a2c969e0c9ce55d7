#include "piano/model.hpp"

#include <cmath>
#include <random>

namespace piano {

Backbone backbone_by_name(const std::string& name) {
  if (name == "ssm") return Backbone::Ssm;
  if (name == "gru") return Backbone::Gru;
  if (name == "mlp") return Backbone::Mlp;
  if (name == "non-ar" || name == "nonar") return Backbone::NonAr;
  throw ValueError("unknown backbone: " + name +
                   " (expected ssm|gru|mlp|non-ar)");
}

std::string to_string(Backbone backbone) {
  switch (backbone) {
    case Backbone::Ssm: return "ssm";
    case Backbone::Gru: return "gru";
    case Backbone::Mlp: return "mlp";
    case Backbone::NonAr: return "non-ar";
  }
  return "?";
}

std::vector<std::string> PianoModel::param_names() const {
  std::vector<std::string> names = {"embed.w", "embed.b"};
  switch (backbone) {
    case Backbone::Ssm:
      for (const char* n : {"ssm.A", "ssm.B", "ssm.C", "ssm.D", "ssm.ln_gain",
                            "ssm.ln_bias"})
        names.push_back(n);
      break;
    case Backbone::Gru:
      for (const char* n : {"gru.wz", "gru.uz", "gru.bz", "gru.wr", "gru.ur",
                            "gru.br", "gru.wh", "gru.uh", "gru.bh"})
        names.push_back(n);
      break;
    case Backbone::Mlp:
      names.push_back("mlp.w");
      names.push_back("mlp.b");
      break;
    case Backbone::NonAr:
      break;
  }
  for (const char* n : {"probe.w1", "probe.b1", "probe.w2", "probe.b2"})
    names.push_back(n);
  return names;
}

namespace {

Matrix xavier(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = dist(rng);
  return w;
}

}  // namespace

PianoModel make_model(Backbone backbone, int k, std::uint64_t seed) {
  if (k < 2) throw ValueError("model: state dimension must be >= 2");
  PianoModel m;
  m.backbone = backbone;
  m.k = k;
  std::mt19937_64 rng(seed);
  const int in = m.input_dim();
  for (const auto& name : m.param_names()) {
    if (name == "embed.w") m.params[name] = xavier(in, k, rng);
    else if (name == "mlp.w") m.params[name] = xavier(k, k, rng);
    else if (name == "probe.w2") m.params[name] = xavier(k, m.l, rng);
    else if (name == "probe.b2") m.params[name] = Matrix::Zero(1, m.l);
    else if (name == "ssm.ln_gain") m.params[name] = Matrix::Ones(1, k);
    else if (name.ends_with(".b") || name.find(".b") != std::string::npos ||
             name == "ssm.ln_bias")
      m.params[name] = Matrix::Zero(1, k);
    else m.params[name] = xavier(k, k, rng);
  }
  return m;
}

long parameter_count(const PianoModel& model) {
  long n = 0;
  for (const auto& [name, p] : model.params) n += p.size();
  return n;
}

namespace {

struct ParamVars {
  std::map<std::string, Var> vars;
  const Var& at(const std::string& name) const { return vars.at(name); }
};

Var affine(const Var& x, const Var& w, const Var& b) {
  return add_rowvec(matmul(x, w), b);
}

Var probe_forward(const ParamVars& p, const Var& o) {
  Var hidden = silu(affine(o, p.at("probe.w1"), p.at("probe.b1")));
  return affine(hidden, p.at("probe.w2"), p.at("probe.b2"));
}

// h = silu(LN(h A + m B)), o = h C + m D + m
std::pair<Var, Var> step_ssm(const ParamVars& p, const Var& h_prev,
                             const Var& m) {
  Var pre = add(matmul(h_prev, p.at("ssm.A")), matmul(m, p.at("ssm.B")));
  Var h = silu(layer_norm(pre, p.at("ssm.ln_gain"), p.at("ssm.ln_bias")));
  Var o = add(add(matmul(h, p.at("ssm.C")), matmul(m, p.at("ssm.D"))), m);
  return {h, o};
}

std::pair<Var, Var> step_gru(const ParamVars& p, const Var& h_prev,
                             const Var& m) {
  Var z = sigmoid(add(affine(m, p.at("gru.wz"), p.at("gru.bz")),
                      matmul(h_prev, p.at("gru.uz"))));
  Var r = sigmoid(add(affine(m, p.at("gru.wr"), p.at("gru.br")),
                      matmul(h_prev, p.at("gru.ur"))));
  Var cand = tanh(add(affine(m, p.at("gru.wh"), p.at("gru.bh")),
                      matmul(cmul(r, h_prev), p.at("gru.uh"))));
  Var h = add(cmul(z, h_prev), cmul(one_minus(z), cand));
  return {h, h};
}

// The MLP transition is memoryless: it sees only the current embedded input,
// so all temporal coupling runs through the previous-prediction feedback in
// the rollout. This keeps it strictly weaker than the gated and state-space
// transitions, which carry a hidden state across steps.
std::pair<Var, Var> step_mlp(const ParamVars& p, const Var& h_prev,
                             const Var& m) {
  Var o = silu(affine(m, p.at("mlp.w"), p.at("mlp.b")));
  return {h_prev, o};
}

}  // namespace

RolloutResult rollout(Tape& tape, const PianoModel& model, const Grid& grid,
                      const Vector& ic, const RolloutOptions& opts) {
  if (ic.size() != grid.nx)
    throw ShapeError("rollout: IC length " + std::to_string(ic.size()) +
                     " does not match Nx=" + std::to_string(grid.nx));
  ParamVars pv;
  for (const auto& name : model.param_names())
    pv.vars.emplace(name, tape.leaf(model.params.at(name)));

  const int nx = grid.nx;
  const Vector t = grid.t_nodes();
  Var x = tape.constant(grid.x_nodes());

  std::vector<Var> columns;
  columns.reserve(grid.m + 1);
  Vector ic_col = ic;
  if (opts.perturb_step == 0) ic_col += opts.perturbation;
  columns.push_back(tape.constant(ic_col));

  const bool autoregressive = model.backbone != Backbone::NonAr;
  Var h = tape.constant(Matrix::Zero(nx, model.k));
  for (int j = 1; j <= grid.m; ++j) {
    Var t_col = tape.constant(Matrix::Constant(nx, 1, t[j]));
    Var s = autoregressive ? concat_cols({x, t_col, columns.back()})
                           : concat_cols({x, t_col});
    Var m = affine(s, pv.at("embed.w"), pv.at("embed.b"));
    Var o = m;
    switch (model.backbone) {
      case Backbone::Ssm: std::tie(h, o) = step_ssm(pv, h, m); break;
      case Backbone::Gru: std::tie(h, o) = step_gru(pv, h, m); break;
      case Backbone::Mlp: std::tie(h, o) = step_mlp(pv, h, m); break;
      case Backbone::NonAr: break;
    }
    Var u = probe_forward(pv, o);
    if (opts.perturb_step == j)
      u = add(u, tape.constant(opts.perturbation));
    if (!u.value().allFinite()) throw DivergenceError(j);
    columns.push_back(u);
  }

  RolloutResult out{concat_cols(columns),
                    autoregressive ? h.value() : Matrix(),
                    std::move(pv.vars)};
  return out;
}

Matrix rollout_field(const PianoModel& model, const Grid& grid,
                     const Vector& ic, const RolloutOptions& opts) {
  Tape tape;
  return rollout(tape, model, grid, ic, opts).field.value();
}

}  // namespace piano
