#include <doctest.h>

#include <cmath>
#include <numbers>

#include "piano/train.hpp"

using namespace piano;

TEST_CASE("cosine schedule hits its endpoints and midpoint") {
  CHECK(cosine_lr(0, 1000, 3e-4, 0.0) == doctest::Approx(3e-4));
  CHECK(cosine_lr(1000, 1000, 3e-4, 0.0) == doctest::Approx(0.0));
  CHECK(cosine_lr(500, 1000, 3e-4, 0.0) == doctest::Approx(1.5e-4));
  CHECK(cosine_lr(250, 1000, 2e-3, 1e-4) ==
        doctest::Approx(1e-4 + 0.5 * (2e-3 - 1e-4) *
                                    (1.0 + std::cos(std::numbers::pi / 4))));
  CHECK_THROWS_AS((void)cosine_lr(-1, 10, 1e-3, 0.0), ValueError);
  CHECK_THROWS_AS((void)cosine_lr(11, 10, 1e-3, 0.0), ValueError);
}

TEST_CASE("AdamW reproduces a three-step hand trace") {
  // Scalar parameter p = 1, constant gradient g = 0.5, lr = 0.1, no decay.
  // m_t = (1 - b1^t) * g, v_t = (1 - b2^t) * g^2, so after bias correction
  // every step is exactly -lr * g / (|g| + eps).
  constexpr double g = 0.5, lr = 0.1, eps = 1e-8;
  std::map<std::string, Matrix> params{{"p", Matrix::Constant(1, 1, 1.0)}};
  std::map<std::string, Matrix> grads{{"p", Matrix::Constant(1, 1, g)}};
  AdamW opt;
  double expected = 1.0;
  for (int t = 0; t < 3; ++t) {
    opt.step(params, grads, lr, 0.0);
    expected -= lr * g / (g + eps);
    CHECK(params.at("p")(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("AdamW hand trace with sign-flipping gradients") {
  // g1 = +1, g2 = -1: m_2 = 0.1*(0.9*1 - 1) = -0.01, v_2 = 0.001*(0.999+1).
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.01;
  std::map<std::string, Matrix> params{{"p", Matrix::Zero(1, 1)}};
  std::map<std::string, Matrix> grads{{"p", Matrix::Constant(1, 1, 1.0)}};
  AdamW opt;
  opt.step(params, grads, lr, 0.0);
  const double p1 = -lr * 1.0 / (1.0 + eps);  // bias corrections cancel at t=1
  CHECK(params.at("p")(0, 0) == doctest::Approx(p1).epsilon(1e-12));

  grads.at("p")(0, 0) = -1.0;
  opt.step(params, grads, lr, 0.0);
  const double m2 = (b1 * (1 - b1) * 1.0 + (1 - b1) * -1.0) / (1 - b1 * b1);
  const double v2 =
      (b2 * (1 - b2) * 1.0 + (1 - b2) * 1.0) / (1 - b2 * b2);
  const double p2 = p1 - lr * m2 / (std::sqrt(v2) + eps);
  CHECK(params.at("p")(0, 0) == doctest::Approx(p2).epsilon(1e-10));
}

TEST_CASE("weight decay is decoupled from the adaptive step") {
  // Zero gradient: the update must be exactly p *= (1 - lr*wd), untouched
  // by the moment estimates.
  std::map<std::string, Matrix> params{{"p", Matrix::Constant(2, 2, 4.0)}};
  std::map<std::string, Matrix> grads{{"p", Matrix::Zero(2, 2)}};
  AdamW opt;
  opt.step(params, grads, 0.1, 0.5);
  CHECK((params.at("p").array() - 4.0 * (1.0 - 0.1 * 0.5)).abs().maxCoeff() <
        1e-12);
  opt.step(params, grads, 0.1, 0.5);
  CHECK((params.at("p").array() - 4.0 * 0.95 * 0.95).abs().maxCoeff() < 1e-12);
}

TEST_CASE("global norm clipping rescales only when needed") {
  std::map<std::string, Matrix> grads{{"a", Matrix::Constant(1, 2, 3.0)},
                                      {"b", Matrix::Constant(1, 2, 4.0)}};
  // Global norm = sqrt(2*9 + 2*16) = sqrt(50).
  const double norm = clip_global_norm(grads, 1.0);
  CHECK(norm == doctest::Approx(std::sqrt(50.0)));
  double after = 0.0;
  for (const auto& e : grads) after += e.second.squaredNorm();
  CHECK(std::sqrt(after) == doctest::Approx(1.0));
  // Ratios preserved.
  CHECK(grads.at("b")(0, 0) / grads.at("a")(0, 0) == doctest::Approx(4.0 / 3.0));

  std::map<std::string, Matrix> small{{"a", Matrix::Constant(1, 1, 0.3)}};
  clip_global_norm(small, 1.0);
  CHECK(small.at("a")(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("loss separates interior, boundary, and velocity terms") {
  const PdeProblem heat = make_heat();
  const SampledGrid sg = sample_grid(heat, 12, 8);
  const StencilSpec spec{1, 2, BoundaryRule::OneSided};
  Tape tape;

  // Analytical field: residual ~ truncation error, boundary exactly zero.
  LossVars exact = piano_loss(tape.leaf(sg.truth), heat, sg.grid, spec);
  CHECK(exact.values.boundary == doctest::Approx(0.0));
  CHECK(exact.values.total ==
        doctest::Approx(exact.values.interior + exact.values.boundary));

  // Corrupting a boundary node moves only the boundary term.
  Matrix bad = sg.truth;
  bad(0, 4) += 1.0;
  LossVars corrupted = piano_loss(tape.leaf(bad), heat, sg.grid, spec);
  CHECK(corrupted.values.boundary > 0.01);

  // Weights scale their own terms.
  LossVars weighted =
      piano_loss(tape.leaf(bad), heat, sg.grid, spec, 2.0, 10.0);
  CHECK(weighted.values.total ==
        doctest::Approx(2.0 * corrupted.values.interior +
                        10.0 * corrupted.values.boundary));

  // Wave adds the velocity-IC penalty; the cos(w t) modes start flat in
  // time, so on a fine time grid the analytical field keeps it near zero
  // (the one-sided stencil's truncation scales like dt^3 * w^4 here).
  const PdeProblem wave = make_wave();
  const SampledGrid wg = sample_grid(wave, 24, 192);
  LossVars wl = piano_loss(tape.leaf(wg.truth), wave, wg.grid, spec);
  CHECK(wl.values.velocity < 1e-2);
  CHECK(wl.values.total >= wl.values.interior);
  // Halving dt cuts the velocity term by ~2^6 (squared dt^3 truncation).
  const SampledGrid wg2 = sample_grid(wave, 24, 96);
  LossVars wl2 = piano_loss(tape.leaf(wg2.truth), wave, wg2.grid, spec);
  CHECK(wl2.values.velocity / wl.values.velocity ==
        doctest::Approx(64.0).epsilon(0.2));
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = TrainConfig{};
  cfg.fd_accuracy = 3;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = TrainConfig{};
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("zero iterations is a no-op that still reports the model") {
  const PdeProblem p = make_reaction();
  const SampledGrid sg = sample_grid(p, 8, 8);
  PianoModel mdl = make_model(Backbone::Ssm, 4, 2);
  const Matrix before = mdl.params.at("embed.w");
  TrainConfig cfg;
  cfg.iterations = 0;
  TrainResult r = train(p, sg.grid, std::move(mdl), cfg);
  CHECK(!r.diverged);
  CHECK(r.history.empty());
  CHECK((r.model.params.at("embed.w") - before).norm() == 0.0);
  CHECK((r.best.params.at("embed.w") - before).norm() == 0.0);
}

TEST_CASE("a short run reduces the training loss") {
  const PdeProblem p = make_reaction();
  const SampledGrid sg = sample_grid(p, 12, 12);
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.log_every = 10;
  TrainResult r = train(p, sg.grid, make_model(Backbone::Ssm, 8, 0), cfg);
  REQUIRE(!r.diverged);
  REQUIRE(r.history.size() > 5);
  CHECK(r.history.back().total < 0.5 * r.history.front().total);
  CHECK(r.best_loss <= r.history.front().total);
  // Learning rate follows the cosine schedule in the log.
  CHECK(r.history.front().lr == doctest::Approx(cfg.lr));
  CHECK(r.history.back().lr < cfg.lr);
}

TEST_CASE("identical seeds give identical training histories") {
  const PdeProblem p = make_heat();
  const SampledGrid sg = sample_grid(p, 10, 10);
  TrainConfig cfg;
  cfg.iterations = 50;
  cfg.log_every = 5;
  cfg.seed = 7;
  TrainResult a = train(p, sg.grid, make_model(Backbone::Gru, 6, 7), cfg);
  TrainResult b = train(p, sg.grid, make_model(Backbone::Gru, 6, 7), cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].total == b.history[i].total);
}

TEST_CASE("spatial batching trains on contiguous windows") {
  const PdeProblem p = make_heat();
  const SampledGrid sg = sample_grid(p, 20, 10);
  TrainConfig cfg;
  cfg.iterations = 40;
  cfg.batch = 8;
  cfg.log_every = 1;
  TrainResult r = train(p, sg.grid, make_model(Backbone::Ssm, 6, 1), cfg);
  CHECK(!r.diverged);
  CHECK(r.history.size() == 40);
  // Same run without batching differs (different loss surface per step).
  cfg.batch = 0;
  TrainResult full = train(p, sg.grid, make_model(Backbone::Ssm, 6, 1), cfg);
  CHECK(r.history.back().total != full.history.back().total);
}

TEST_CASE("snapshots fire exactly at the requested iterations") {
  const PdeProblem p = make_reaction();
  const SampledGrid sg = sample_grid(p, 8, 8);
  TrainConfig cfg;
  cfg.iterations = 20;
  std::vector<int> seen;
  train(p, sg.grid, make_model(Backbone::Mlp, 4, 0), cfg,
        [&](int it, const Matrix& field) {
          seen.push_back(it);
          CHECK(field.rows() == sg.grid.nx);
          CHECK(field.cols() == sg.grid.m + 1);
        },
        {1, 10, 20});
  CHECK(seen == std::vector<int>{1, 10, 20});
}
