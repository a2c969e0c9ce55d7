#include "piano/harness.hpp"

#include <algorithm>
#include <cmath>

namespace piano {

std::string ExperimentSpec::label() const {
  return problem + "/" + to_string(backbone) + "/fd" +
         std::to_string(fd_accuracy) + "/k" + std::to_string(k) + "/" +
         std::to_string(nx) + "x" + std::to_string(m);
}

std::vector<ExperimentSpec> default_ablation_matrix(int iterations, int k,
                                                    int nx, int m) {
  std::vector<ExperimentSpec> specs;
  for (Backbone b :
       {Backbone::Ssm, Backbone::Gru, Backbone::Mlp, Backbone::NonAr}) {
    ExperimentSpec s;
    s.backbone = b;
    s.k = k; s.nx = nx; s.m = m;
    s.iterations = iterations;
    specs.push_back(s);
  }
  ExperimentSpec fd1 = specs.front();
  fd1.fd_accuracy = 1;
  specs.push_back(fd1);
  return specs;
}

namespace {

struct Moments {
  double mean = 0.0, stddev = 0.0;
};

Moments sample_moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= xs.size();
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / (xs.size() - 1));
  }
  return m;
}

}  // namespace

std::vector<CellResult> run_matrix(const std::vector<ExperimentSpec>& specs,
                                   const ProgressFn& progress) {
  std::vector<CellResult> results;
  for (const auto& spec : specs) {
    const PdeProblem problem = problem_by_name(spec.problem);
    const Grid grid = sample_grid(problem, spec.nx, spec.m).grid;
    const Grid eval_grid = make_eval_grid(problem, grid);

    CellResult cell;
    cell.spec = spec;
    std::vector<double> rmaes, rrmses;
    for (std::uint64_t seed : spec.seeds) {
      ++cell.seed_count;
      TrainConfig cfg;
      cfg.iterations = spec.iterations;
      cfg.lr = spec.lr;
      cfg.fd_accuracy = spec.fd_accuracy;
      cfg.seed = seed;
      TrainResult tr =
          train(problem, grid, make_model(spec.backbone, spec.k, seed), cfg);
      if (tr.diverged) {
        ++cell.diverged_count;
        if (progress)
          progress(spec.label() + " seed " + std::to_string(seed) +
                   ": diverged at iteration " +
                   std::to_string(tr.diverged_at));
        continue;
      }
      MetricsReport rep = evaluate(tr.best, problem, eval_grid);
      rmaes.push_back(rep.rmae);
      rrmses.push_back(rep.rrmse);
      cell.per_seed_rrmse.push_back(rep.rrmse);
      if (progress)
        progress(spec.label() + " seed " + std::to_string(seed) +
                 ": rrmse=" + std::to_string(rep.rrmse));
    }
    const Moments ma = sample_moments(rmaes);
    const Moments mr = sample_moments(rrmses);
    cell.rmae_mean = ma.mean;
    cell.rmae_std = ma.stddev;
    cell.rrmse_mean = mr.mean;
    cell.rrmse_std = mr.stddev;
    results.push_back(std::move(cell));
  }
  return results;
}

namespace {

const CellResult* find_cell(const std::vector<CellResult>& results,
                            Backbone backbone, int fd_accuracy) {
  for (const auto& r : results)
    if (r.spec.backbone == backbone && r.spec.fd_accuracy == fd_accuracy &&
        r.seed_count > r.diverged_count)
      return &r;
  return nullptr;
}

void add_pair(std::vector<OrderingResult>& out, const std::string& name,
              const CellResult* worse, const CellResult* better,
              bool strict) {
  if (!worse || !better) return;
  OrderingResult r;
  r.name = name;
  r.lhs = worse->rrmse_mean;
  r.rhs = better->rrmse_mean;
  r.margin = r.lhs - r.rhs;
  r.pass = strict ? r.margin > 0.0 : r.margin >= 0.0;
  out.push_back(r);
}

}  // namespace

std::vector<OrderingResult> ordering_check(
    const std::vector<CellResult>& results) {
  if (results.empty()) throw ValueError("ordering_check: no results");
  std::vector<OrderingResult> out;

  const CellResult* nonar = find_cell(results, Backbone::NonAr, 2);
  const CellResult* mlp = find_cell(results, Backbone::Mlp, 2);
  const CellResult* gru = find_cell(results, Backbone::Gru, 2);
  const CellResult* ssm = find_cell(results, Backbone::Ssm, 2);
  const CellResult* fd1 = find_cell(results, Backbone::Ssm, 1);

  add_pair(out, "non-ar > mlp", nonar, mlp, true);
  add_pair(out, "mlp > gru", mlp, gru, true);
  add_pair(out, "gru >= ssm", gru, ssm, false);
  add_pair(out, "fd1 > fd2", fd1, ssm, true);

  // Sweeps: rRMSE should fall as the state dimension or grid grows.
  auto sweep = [&](auto key, const std::string& label) {
    std::vector<const CellResult*> cells;
    for (const auto& r : results)
      if (r.spec.backbone == Backbone::Ssm && r.spec.fd_accuracy == 2)
        cells.push_back(&r);
    std::sort(cells.begin(), cells.end(),
              [&](auto* a, auto* b) { return key(*a) < key(*b); });
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (key(*cells[i]) == key(*cells[i - 1])) continue;
      add_pair(out,
               label + " " + std::to_string(key(*cells[i - 1])) + " vs " +
                   std::to_string(key(*cells[i])),
               cells[i - 1], cells[i], true);
    }
  };
  bool k_sweep = false, grid_sweep = false;
  for (std::size_t i = 1; i < results.size(); ++i) {
    k_sweep = k_sweep || results[i].spec.k != results[0].spec.k;
    grid_sweep = grid_sweep || results[i].spec.nx != results[0].spec.nx;
  }
  if (k_sweep)
    sweep([](const CellResult& r) { return r.spec.k; }, "k");
  if (grid_sweep)
    sweep([](const CellResult& r) { return r.spec.nx; }, "grid");

  if (out.empty()) throw ValueError("ordering_check: required cells missing");
  return out;
}

std::string results_csv(const std::vector<CellResult>& results) {
  std::string out =
      "problem,backbone,fd_order,k,Nx,M,seed_count,rmae_mean,rmae_std,"
      "rrmse_mean,rrmse_std,diverged_count\n";
  char buf[256];
  for (const auto& r : results) {
    snprintf(buf, sizeof buf, "%s,%s,%d,%d,%d,%d,%d,%.8g,%.8g,%.8g,%.8g,%d\n",
             r.spec.problem.c_str(), to_string(r.spec.backbone).c_str(),
             r.spec.fd_accuracy, r.spec.k, r.spec.nx, r.spec.m, r.seed_count,
             r.rmae_mean, r.rmae_std, r.rrmse_mean, r.rrmse_std,
             r.diverged_count);
    out += buf;
  }
  return out;
}

}  // namespace piano
