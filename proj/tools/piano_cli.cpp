#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "piano/harness.hpp"
#include "piano/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace piano;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitIo = 3;

struct CommonOpts {
  std::string problem;
  int nx = 50;
  int steps = 50;
  std::string out = "out";
  bool long_form = false;
};

std::string loss_csv(const std::vector<LossRecord>& history) {
  std::string out = "iteration,lr,total,E_interior,E_boundary\n";
  char buf[192];
  for (const auto& r : history) {
    snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iteration,
             r.lr, r.total, r.interior, r.boundary);
    out += buf;
  }
  return out;
}

void write_field(const fs::path& path, const Matrix& field, bool long_form) {
  atomic_write(path, long_form ? matrix_csv_long(field) : matrix_csv(field));
}

int cmd_train(const CommonOpts& c, const std::string& backbone, int k,
              int iters, std::uint64_t seed, const TrainConfig& base,
              const std::vector<double>& snapshot_pcts) {
  PdeProblem problem = problem_by_name(c.problem);
  SampledGrid sg = sample_grid(problem, c.nx, c.steps);

  TrainConfig cfg = base;
  cfg.iterations = iters;
  cfg.seed = seed;

  std::vector<int> marks;
  for (double pct : snapshot_pcts) {
    int it = static_cast<int>(pct / 100.0 * iters + 0.5);
    if (it >= 1 && it <= iters) marks.push_back(it);
  }
  fs::path out(c.out);
  auto snapshot = [&](int iteration, const Matrix& field) {
    write_field(out / ("snapshot_" + std::to_string(iteration) + ".csv"),
                field, c.long_form);
  };

  PianoModel model = make_model(backbone_by_name(backbone), k, seed);
  TrainResult result =
      train(problem, sg.grid, std::move(model), cfg, snapshot, marks);

  atomic_write(out / "loss.csv", loss_csv(result.history));
  if (result.diverged) {
    std::cerr << "training diverged at iteration " << result.diverged_at
              << " (last finite loss " << result.last_finite_loss << ")\n";
    return kExitDivergence;
  }
  save_checkpoint(out / "checkpoint.json", result.best, c.problem);
  save_checkpoint(out / "checkpoint_final.json", result.model, c.problem);
  std::cout << "trained " << c.problem << " (" << backbone << ", k=" << k
            << ") for " << iters << " iterations; best loss "
            << result.best_loss << "\n";
  return kExitOk;
}

Grid eval_grid_for(const PdeProblem& problem, const CommonOpts& c,
                   bool half_offset) {
  Grid train = sample_grid(problem, c.nx, c.steps).grid;
  return half_offset ? make_eval_grid(problem, train) : train;
}

Matrix model_field_on(const PianoModel& model, const PdeProblem& problem,
                      const Grid& grid) {
  const Vector x = grid.x_nodes();
  Vector ic(grid.nx);
  for (int i = 0; i < grid.nx; ++i) ic[i] = problem.analytical(x[i], grid.t_min);
  return rollout_field(model, grid, ic);
}

json metrics_json(const MetricsReport& rep, const CommonOpts& c,
                  std::uint64_t seed) {
  json j;
  j["problem"] = c.problem;
  j["grid"] = std::to_string(c.nx) + "x" + std::to_string(c.steps);
  j["seed"] = seed;
  j["rmae"] = rep.rmae;
  j["rrmse"] = rep.rrmse;
  j["bound_pass"] = rep.bound_checked ? json(rep.bound_pass) : json(nullptr);
  j["max_delta"] = rep.has_delta ? json(rep.max_delta) : json(nullptr);
  return j;
}

int cmd_eval(const CommonOpts& c, const std::string& checkpoint,
             bool half_offset, const std::vector<int>& profile_rows,
             std::uint64_t seed) {
  Checkpoint ck = load_checkpoint(checkpoint);
  PdeProblem problem = problem_by_name(c.problem);
  Grid grid = eval_grid_for(problem, c, half_offset);

  Matrix pred = model_field_on(ck.model, problem, grid);
  Matrix truth = analytical_field(problem, grid);
  MetricsReport rep = evaluate_field(pred, problem, grid);

  fs::path out(c.out);
  atomic_write(out / "metrics.json", metrics_json(rep, c, seed).dump(2) + "\n");
  write_field(out / "pred.csv", pred, c.long_form);
  write_field(out / "truth.csv", truth, c.long_form);
  write_field(out / "abs_error.csv", (pred - truth).cwiseAbs(), c.long_form);

  if (!profile_rows.empty()) {
    // Temporal profile u(x_i, t) for selected spatial indices.
    std::string csv = "t";
    for (int i : profile_rows) {
      if (i < 0 || i >= grid.nx)
        throw ValueError("profile index out of range: " + std::to_string(i));
      csv += ",x" + std::to_string(i);
    }
    csv += "\n";
    const Vector t = grid.t_nodes();
    char buf[64];
    for (int j = 0; j <= grid.m; ++j) {
      snprintf(buf, sizeof buf, "%.17g", t[j]);
      csv += buf;
      for (int i : profile_rows) {
        snprintf(buf, sizeof buf, ",%.17g", pred(i, j));
        csv += buf;
      }
      csv += "\n";
    }
    atomic_write(out / "profile.csv", csv);
  }
  std::cout << "rmae=" << rep.rmae << " rrmse=" << rep.rrmse << "\n";
  return kExitOk;
}

int cmd_diagnose(const CommonOpts& c, const std::string& checkpoint,
                 bool half_offset) {
  Checkpoint ck = load_checkpoint(checkpoint);
  PdeProblem problem = problem_by_name(c.problem);
  if (!problem.flow_oracle) {
    std::cerr << "diagnose: '" << c.problem
              << "' has no one-step evolution oracle (second order in time); "
                 "supported: reaction, convection, heat\n";
    return kExitUsage;
  }
  Grid grid = eval_grid_for(problem, c, half_offset);
  Matrix pred = model_field_on(ck.model, problem, grid);
  Matrix truth = analytical_field(problem, grid);

  Vector e = step_errors(pred, truth, grid.dx());
  Vector delta = rollout_errors(pred, problem, grid);
  const double tol = oracle_tolerance(problem, grid);
  const Vector lips = lipschitz_factors(pred, problem, grid);
  BoundCheck bc = check_bound(e, delta, lips, tol);

  std::string csv = "n,e_n,delta_n,bound_rhs,pass\n";
  char buf[160];
  for (Eigen::Index n = 0; n < delta.size(); ++n) {
    snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%d\n",
             static_cast<long long>(n), e[n], delta[n], bc.rhs[n],
             bc.per_step[n] ? 1 : 0);
    csv += buf;
  }
  fs::path out(c.out);
  atomic_write(out / "diagnostic.csv", csv);

  json j;
  j["problem"] = c.problem;
  j["lipschitz"] = lips.maxCoeff();
  j["tolerance"] = tol;
  j["bound_pass"] = bc.pass;
  j["min_slack"] = bc.min_slack;
  j["max_delta"] = delta.maxCoeff();
  atomic_write(out / "summary.json", j.dump(2) + "\n");
  std::cout << "bound " << (bc.pass ? "holds" : "VIOLATED") << "; max delta "
            << delta.maxCoeff() << "\n";
  return bc.pass ? kExitOk : kExitDivergence;
}

int cmd_ablate(const std::string& out_dir, const std::string& problem,
               const std::vector<std::string>& backbones,
               const std::vector<int>& fd_orders, const std::vector<int>& ks,
               const std::vector<int>& grids, int iters, double lr,
               const std::vector<std::uint64_t>& seeds) {
  std::vector<ExperimentSpec> specs;
  for (const auto& b : backbones)
    for (int fd : fd_orders)
      for (int k : ks)
        for (int n : grids) {
          ExperimentSpec s;
          s.problem = problem;
          s.backbone = backbone_by_name(b);
          s.fd_accuracy = fd;
          s.k = k;
          s.nx = n;
          s.m = n;
          s.iterations = iters;
          s.lr = lr;
          s.seeds = seeds;
          specs.push_back(s);
        }
  if (specs.empty()) {
    std::cerr << "ablate: empty experiment matrix\n";
    return kExitUsage;
  }
  auto progress = [](const std::string& msg) { std::cout << msg << "\n"; };
  std::vector<CellResult> results = run_matrix(specs, progress);
  fs::path out(out_dir);
  atomic_write(out / "results.csv", results_csv(results));

  json j = json::array();
  try {
    for (const auto& o : ordering_check(results)) {
      j.push_back({{"check", o.name},
                   {"lhs", o.lhs},
                   {"rhs", o.rhs},
                   {"margin", o.margin},
                   {"pass", o.pass}});
      std::cout << (o.pass ? "PASS " : "FAIL ") << o.name << " (" << o.lhs
                << " vs " << o.rhs << ")\n";
    }
  } catch (const ValueError&) {
    // single-cell matrices have nothing to order
  }
  atomic_write(out / "ordering.json", j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed autoregressive PDE solver"};
  app.require_subcommand(1);
  // Config keys live in a section named after the subcommand, e.g.
  //   [train]
  //   problem=heat
  app.set_config("--config")->description(
      "key=value config file; flags override file values");
  app.allow_config_extras(false);

  CommonOpts c;
  std::string backbone = "ssm", checkpoint;
  int k = 64, iters = 20000;
  std::uint64_t seed = 0;
  TrainConfig base;
  std::vector<double> snapshot_pcts = {5, 25, 50, 100};
  bool half_offset = false;
  std::vector<int> profile_rows;

  auto add_common = [&](CLI::App* sub, bool needs_problem) {
    sub->allow_config_extras(false);
    auto* p = sub->add_option("--problem", c.problem,
                              "benchmark: wave|reaction|convection|heat");
    if (needs_problem) p->required();
    sub->add_option("--nx", c.nx, "spatial node count");
    sub->add_option("--steps", c.steps, "time-step count M");
    sub->add_option("--out", c.out, "output directory");
    sub->add_flag("--long-form", c.long_form,
                  "grid CSVs as x_index,t_index,value rows");
  };

  auto* t = app.add_subcommand("train", "train a model on a benchmark");
  add_common(t, true);
  t->add_option("--backbone", backbone, "ssm|gru|mlp|non-ar");
  t->add_option("--k", k, "state dimension");
  t->add_option("--iters", iters, "training iterations");
  t->add_option("--seed", seed, "RNG seed");
  t->add_option("--lr", base.lr, "initial learning rate");
  t->add_option("--lr-min", base.lr_min, "final learning rate");
  t->add_option("--weight-decay", base.weight_decay, "AdamW weight decay");
  t->add_option("--clip-norm", base.clip_norm, "global gradient-norm clip");
  t->add_option("--lambda-interior", base.lambda_interior, "PDE loss weight");
  t->add_option("--lambda-boundary", base.lambda_boundary, "BC loss weight");
  t->add_option("--fd-order", base.fd_accuracy, "FD accuracy order (1|2)");
  t->add_option("--batch", base.batch, "spatial batch size (0 = all)");
  t->add_option("--log-every", base.log_every, "loss history granularity");
  t->add_option("--snapshots", snapshot_pcts,
                "snapshot schedule as percentages of total iterations");

  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(e, true);
  e->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  e->add_flag("--half-offset", half_offset,
              "evaluate on the half-spacing offset grid");
  e->add_option("--profile-x", profile_rows,
                "spatial indices for a temporal-profile CSV");
  e->add_option("--seed", seed, "seed recorded in metrics.json");

  auto* d = app.add_subcommand("diagnose",
                               "per-step rollout errors and bound check");
  add_common(d, true);
  d->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  d->add_flag("--half-offset", half_offset,
              "diagnose on the half-spacing offset grid");

  auto* a = app.add_subcommand("ablate", "run an experiment matrix");
  a->allow_config_extras(false);
  std::string ab_problem = "reaction", ab_out = "out";
  std::vector<std::string> ab_backbones = {"ssm", "gru", "mlp", "non-ar"};
  std::vector<int> ab_fd = {2}, ab_ks = {64}, ab_grids = {50};
  std::vector<std::uint64_t> ab_seeds = {0, 1, 2};
  int ab_iters = 20000;
  a->add_option("--problem", ab_problem, "benchmark name");
  a->add_option("--out", ab_out, "output directory");
  a->add_option("--backbones", ab_backbones, "backbone list");
  a->add_option("--fd-orders", ab_fd, "FD accuracy orders");
  a->add_option("--k-list", ab_ks, "state dimensions");
  a->add_option("--grid-list", ab_grids, "square grid sizes (Nx = M)");
  a->add_option("--iters", ab_iters, "iterations per run");
  double ab_lr = 3e-4;
  a->add_option("--lr", ab_lr, "initial learning rate per run");
  a->add_option("--seeds", ab_seeds, "seed list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (t->parsed())
      return cmd_train(c, backbone, k, iters, seed, base, snapshot_pcts);
    if (e->parsed())
      return cmd_eval(c, checkpoint, half_offset, profile_rows, seed);
    if (d->parsed()) return cmd_diagnose(c, checkpoint, half_offset);
    if (a->parsed())
      return cmd_ablate(ab_out, ab_problem, ab_backbones, ab_fd, ab_ks,
                        ab_grids, ab_iters, ab_lr, ab_seeds);
  } catch (const IoError& err) {
    std::cerr << "I/O error: " << err.what() << "\n";
    return kExitIo;
  } catch (const DivergenceError& err) {
    std::cerr << err.what() << "\n";
    return kExitDivergence;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
