// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mimosync/estimators.hpp"
#include "mimosync/numerics.hpp"
#include "mimosync/rng.hpp"

using namespace mimosync;

namespace {

SystemConfig test_config() {
  SystemConfig cfg;
  cfg.n = 32;
  cfg.n_tx = 2;
  cfg.n_rx = 2;
  cfg.cir_len = 3;
  cfg.ste_max = 4;
  cfg.cp_len = 8;
  cfg.noise_var = 0.0;
  return cfg;
}

GridSpec test_grid() {
  GridSpec grid;
  grid.cfo = {-0.2, 0.2, 0.05};     // 9 points
  grid.sfo = {-2e-3, 2e-3, 5e-4};   // 9 points
  grid.ste = {-2, 4};               // 7 points
  return grid;
}

struct Draw {
  TrainingMatrix x;
  ChannelState ch;
  CVector r;
};

Draw synth(const SystemConfig& cfg, const Impairments& imp, std::uint64_t seed) {
  TrainingMatrix x = generate_training(cfg, Rng::derive(seed, {1}));
  ChannelProfile prof = ChannelProfile::exponential(cfg.cir_len, 2.0);
  ChannelState ch = generate_channel(cfg, prof, Rng::derive(seed, {2}));
  ReceivedSignal sig = synthesize(cfg, x, imp, ch, Rng::derive(seed, {3}));
  return {x, ch, sig.samples};
}

}  // namespace

TEST_CASE("grid arithmetic and validation") {
  GridSpec grid = test_grid();
  CHECK(grid.cfo.count() == 9);
  CHECK(grid.sfo.count() == 9);
  CHECK(grid.ste.count() == 7);
  CHECK(grid.cfo.value(4) == doctest::Approx(0.0));
  CHECK(grid.ste.value(0) == -2);
  grid.validate(test_config());

  GridSpec bad = test_grid();
  bad.cfo.step = 0.0;
  CHECK_THROWS_AS(bad.validate(test_config()), EmptyGrid);
  bad = test_grid();
  bad.cfo.lo = 0.3;
  bad.cfo.hi = 0.2;
  CHECK_THROWS_AS(bad.validate(test_config()), EmptyGrid);
  bad = test_grid();
  bad.ste.hi = 5;  // beyond the model's timing slack
  CHECK_THROWS_AS(bad.validate(test_config()), ConfigError);
}

TEST_CASE("algorithm names round trip") {
  CHECK(algorithm_from_name("ml") == Algorithm::kMl);
  CHECK(algorithm_from_name("MML") == Algorithm::kMml);
  CHECK(algorithm_from_name("sml") == Algorithm::kSml);
  CHECK(algorithm_name(Algorithm::kSml) == std::string("sml"));
  CHECK_THROWS_AS(algorithm_from_name("bogus"), ConfigError);
}

TEST_CASE("joint cost equals the explicit padded projection") {
  SystemConfig cfg = test_config();
  Impairments imp{0.1, 5e-4, 1};
  Draw d = synth(cfg, imp, 71);
  for (double cfo : {-0.15, 0.0, 0.1}) {
    for (double sfo : {-1e-3, 0.0, 5e-4}) {
      const double direct = proj_norm_sq(
          ste_free_observation(cfg, d.x, cfo, sfo, 1), d.r);
      const double cost = cost_cfo_sfo(cfg, d.x, d.r, cfo, sfo, 1);
      CHECK(cost == doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("timing cost equals the full-model projection") {
  SystemConfig cfg = test_config();
  Impairments imp{0.1, 5e-4, 1};
  Draw d = synth(cfg, imp, 73);
  for (int ste : {-2, 0, 3}) {
    Impairments hyp{0.1, 5e-4, ste};
    const double direct = proj_norm_sq(observation_matrix(cfg, d.x, hyp), d.r);
    CHECK(cost_ste(cfg, d.x, d.r, 0.1, 5e-4, ste) ==
          doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("noiseless in-span cost captures the whole energy") {
  SystemConfig cfg = test_config();
  Impairments imp{-0.1, 1e-3, 2};
  Draw d = synth(cfg, imp, 79);
  const double cost = cost_cfo_sfo(cfg, d.x, d.r, imp.cfo, imp.sfo, 0);
  CHECK(cost == doctest::Approx(d.r.squaredNorm()).epsilon(1e-10));
  // And the cost can never exceed the energy.
  CHECK(cost_cfo_sfo(cfg, d.x, d.r, 0.05, 0.0, 0) <=
        d.r.squaredNorm() * (1 + 1e-12));
}

TEST_CASE("exhaustive search recovers on-grid truth noiselessly") {
  SystemConfig cfg = test_config();
  GridSpec grid = test_grid();
  EstimatorOptions opts;
  opts.pad_offset = 2;
  for (std::uint64_t seed : {101, 102, 103}) {
    // The true delay support has to sit inside the recentered padded window,
    // here [-2, 2].
    Impairments imp{-0.05, 1e-3, (int)(seed % 5) - 2};
    Draw d = synth(cfg, imp, seed);
    EstimationResult est = ml_estimate(cfg, d.x, d.r, grid, opts);
    CHECK(est.algo == Algorithm::kMl);
    CHECK(est.cfo_hat == doctest::Approx(imp.cfo).epsilon(1e-12));
    CHECK(est.sfo_hat == doctest::Approx(imp.sfo).epsilon(1e-12));
    CHECK(est.ste_hat == imp.ste);
    CHECK((est.ch_hat.stacked() - d.ch.stacked()).norm() /
              d.ch.stacked().norm() < 1e-6);
  }
}

TEST_CASE("stage-wise search recovers on-grid truth noiselessly") {
  SystemConfig cfg = test_config();
  GridSpec grid = test_grid();
  EstimatorOptions opts;
  opts.pad_offset = 2;
  for (std::uint64_t seed : {111, 112}) {
    Impairments imp{0.15, -5e-4, (int)(seed % 5) - 2};  // stays in [-2, 2]
    Draw d = synth(cfg, imp, seed);
    EstimationResult est = sml_estimate(cfg, d.x, d.r, grid, opts);
    CHECK(est.algo == Algorithm::kSml);
    CHECK(est.cfo_hat == doctest::Approx(imp.cfo).epsilon(1e-12));
    CHECK(est.sfo_hat == doctest::Approx(imp.sfo).epsilon(1e-12));
    CHECK(est.ste_hat == imp.ste);
    CHECK((est.ch_hat.stacked() - d.ch.stacked()).norm() /
              d.ch.stacked().norm() < 1e-6);
  }
}

TEST_CASE("surrogate fit recovers truth noiselessly at small offsets") {
  SystemConfig cfg = test_config();
  GridSpec grid = test_grid();
  EstimatorOptions opts;
  opts.pad_offset = 2;
  Impairments imp{0.0, 1e-3, -1};  // null CFO: surrogate is exact here
  Draw d = synth(cfg, imp, 121);
  EstimationResult est = mml_estimate(cfg, d.x, d.r, grid, opts);
  CHECK(est.algo == Algorithm::kMml);
  CHECK(std::abs(est.cfo_hat) < 1e-8);
  CHECK(est.sfo_hat == doctest::Approx(imp.sfo).epsilon(1e-12));
  CHECK(est.ste_hat == imp.ste);
  CHECK((est.ch_hat.stacked() - d.ch.stacked()).norm() /
            d.ch.stacked().norm() < 1e-6);
  CHECK(est.diag.mml_cfo_in_range);
}

TEST_CASE("closed-form CFO fit matches the literal dense construction") {
  SystemConfig cfg = test_config();
  cfg.n = 16;
  cfg.cir_len = 2;
  cfg.ste_max = 3;
  cfg.cp_len = 6;
  Impairments imp{0.04, 3e-4, 1};
  Draw d = synth(cfg, imp, 131);
  const double sfo = imp.sfo;

  CMatrix a2 = cfo_free_core(cfg, d.x, sfo, 0);
  CMatrix p = a2 * pinv(a2);
  const int nr = cfg.recv_dim();
  CMatrix pbig = CMatrix::Zero(nr, nr);
  for (int v = 0; v < cfg.n_rx; ++v)
    pbig.block(v * cfg.n, v * cfg.n, cfg.n, cfg.n) = p;
  CMatrix cmat = d.r.asDiagonal().toDenseMatrix().adjoint() *
                 (CMatrix::Identity(nr, nr) - pbig);
  CMatrix cch = cmat * cmat.adjoint();
  RVector c1(nr);
  for (int v = 0; v < cfg.n_rx; ++v)
    for (int t = 0; t < cfg.n; ++t)
      c1[v * cfg.n + t] = 2.0 * M_PI * (1.0 + sfo) * t / cfg.n;
  const double num = c1.transpose() * cch.imag() * RVector::Ones(nr);
  const double den = c1.transpose() * cch.real() * c1;
  const double t0 = (RVector::Ones(nr).transpose() * cch.real() *
                     RVector::Ones(nr)).value();

  MmlCfoFit fit = mml_cfo_closed_form(cfg, d.x, d.r, sfo, 0);
  CHECK(fit.cfo_hat == doctest::Approx(num / den).epsilon(1e-10));
  CHECK(fit.t0 == doctest::Approx(t0).epsilon(1e-10));
  CHECK(fit.t_lin == doctest::Approx(num).epsilon(1e-10));
  CHECK(fit.t_quad == doctest::Approx(den).epsilon(1e-10));
  CHECK(fit.cost ==
        doctest::Approx(t0 - 2 * (num / den) * num +
                        (num / den) * (num / den) * den).epsilon(1e-10));
}

TEST_CASE("closed-form CFO fit tracks a fine line search of the exact cost") {
  SystemConfig cfg = test_config();
  Impairments imp{0.01, 5e-4, 0};  // well inside the surrogate's range
  Draw d = synth(cfg, imp, 141);
  MmlCfoFit fit = mml_cfo_closed_form(cfg, d.x, d.r, imp.sfo, 0);
  const double fine = 1e-4;
  double best_cost = -1.0, best_cfo = 0.0;
  for (double cfo = -0.03; cfo <= 0.03 + 1e-12; cfo += fine) {
    const double c = cost_cfo_sfo(cfg, d.x, d.r, cfo, imp.sfo, 0);
    if (c > best_cost) {
      best_cost = c;
      best_cfo = cfo;
    }
  }
  CHECK(std::abs(fit.cfo_hat - best_cfo) <= 2 * fine);
}

TEST_CASE("surrogate fit is flagged outside its trust range") {
  // Construct an input whose ramp-weighted copy lies almost entirely inside
  // the projection span: the fit denominator collapses while the numerator
  // stays finite, so the closed form lands far beyond the trust limit.
  SystemConfig cfg = test_config();
  TrainingMatrix x = generate_training(cfg, 171);
  CMatrix core = cfo_free_core(cfg, x, 0.0, 0);
  const double tau = 2.0 * M_PI;
  Rng rng(9);
  CVector r(cfg.recv_dim());
  for (int v = 0; v < cfg.n_rx; ++v) {
    // u = core * g with g chosen orthogonal to the core's first row, so
    // u[0] == 0 and r = u / c (with c the ramp) is well defined everywhere.
    CVector g = CVector::Zero(core.cols());
    g[0] = core(0, 1);
    g[1] = -core(0, 0);
    CVector u = core * g;
    u *= 10.0 / u.norm();
    for (int t = 0; t < cfg.n; ++t) {
      const double c = tau * t / cfg.n;
      r[v * cfg.n + t] = (t == 0) ? Complex(0.0, 0.0) : u[t] / c;
      r[v * cfg.n + t] += 1e-3 * rng.cgaussian();
    }
  }
  GridSpec grid = test_grid();
  grid.sfo = {0.0, 0.0, 1e-4};  // single hypothesis, matching the core above
  EstimationResult est = mml_estimate(cfg, x, r, grid, {});
  CHECK_FALSE(est.diag.mml_cfo_in_range);
  CHECK(std::abs(est.cfo_hat) > kMmlCfoValidityLimit);
}

TEST_CASE("search point counts follow the complexity formulas") {
  SystemConfig cfg = test_config();
  GridSpec grid = test_grid();
  EstimatorOptions opts;
  opts.pad_offset = 2;
  Impairments imp{0.05, 5e-4, 1};
  Draw d = synth(cfg, imp, 161);
  const long ge = grid.cfo.count(), gn = grid.sfo.count(),
             gt = grid.ste.count();

  EstimationResult ml = ml_estimate(cfg, d.x, d.r, grid, opts);
  CHECK(ml.diag.stage1_points == ge * gn);
  CHECK(ml.diag.stage2_points == gt);
  CHECK(ml.diag.total_points() == ge * gn + gt);
  CHECK(ml.diag.skipped_points == 0);

  EstimationResult mml = mml_estimate(cfg, d.x, d.r, grid, opts);
  CHECK(mml.diag.stage1_points == gn);
  CHECK(mml.diag.stage2_points == gt);
  CHECK(mml.diag.total_points() == gn + gt);

  EstimationResult sml = sml_estimate(cfg, d.x, d.r, grid, opts);
  CHECK(sml.diag.stage1_points == ge * gt);
  CHECK(sml.diag.stage2_points == gn);
  CHECK(sml.diag.total_points() == ge * gt + gn);
}

TEST_CASE("equal costs break ties toward the lowest grid index") {
  SystemConfig cfg = test_config();
  GridSpec grid = test_grid();
  TrainingMatrix x = generate_training(cfg, 171);
  CVector zero = CVector::Zero(cfg.recv_dim());
  // An all-zero input ties every grid point at cost zero.
  EstimationResult ml = ml_estimate(cfg, x, zero, grid, {});
  CHECK(ml.cfo_hat == doctest::Approx(grid.cfo.lo));
  CHECK(ml.sfo_hat == doctest::Approx(grid.sfo.lo));
  CHECK(ml.ste_hat == grid.ste.lo);
  EstimationResult sml = sml_estimate(cfg, x, zero, grid, {});
  CHECK(sml.cfo_hat == doctest::Approx(grid.cfo.lo));
  CHECK(sml.ste_hat == grid.ste.lo);
  CHECK(sml.sfo_hat == doctest::Approx(grid.sfo.lo));
}

TEST_CASE("estimates are deterministic across repeated calls") {
  SystemConfig cfg = test_config();
  cfg.noise_var = 0.05;
  GridSpec grid = test_grid();
  Impairments imp{0.1, -1e-3, 2};
  Draw d = synth(cfg, imp, 181);
  EstimationResult a = ml_estimate(cfg, d.x, d.r, grid, {});
  EstimationResult b = ml_estimate(cfg, d.x, d.r, grid, {});
  CHECK(a.cfo_hat == b.cfo_hat);
  CHECK(a.sfo_hat == b.sfo_hat);
  CHECK(a.ste_hat == b.ste_hat);
  CHECK((a.ch_hat.stacked() - b.ch_hat.stacked()).norm() == 0.0);
  CHECK(a.diag.stage1_cost == b.diag.stage1_cost);
}

TEST_CASE("exhaustive search dominates the cheaper searches on its cost") {
  SystemConfig cfg = test_config();
  cfg.noise_var = 0.1;  // noisy draws: estimates differ across algorithms
  GridSpec grid = test_grid();
  EstimatorOptions opts;
  opts.pad_offset = 2;
  for (std::uint64_t seed : {191, 192, 193, 194}) {
    Impairments imp{0.05, 5e-4, 0};
    Draw d = synth(cfg, imp, seed);
    EstimationResult ml = ml_estimate(cfg, d.x, d.r, grid, opts);
    EstimationResult mml = mml_estimate(cfg, d.x, d.r, grid, opts);
    EstimationResult sml = sml_estimate(cfg, d.x, d.r, grid, opts);
    const double j_ml =
        cost_cfo_sfo(cfg, d.x, d.r, ml.cfo_hat, ml.sfo_hat, opts.pad_offset);
    const double j_mml =
        cost_cfo_sfo(cfg, d.x, d.r, mml.cfo_hat, mml.sfo_hat, opts.pad_offset);
    const double j_sml =
        cost_cfo_sfo(cfg, d.x, d.r, sml.cfo_hat, sml.sfo_hat, opts.pad_offset);
    CHECK(j_ml >= j_mml * (1 - 1e-12));
    CHECK(j_ml >= j_sml * (1 - 1e-12));
  }
}

TEST_CASE("timing failure probability counts misses at threshold p") {
  std::vector<EstimationResult> results(10);
  for (int i = 0; i < 10; ++i) results[i].ste_hat = (i < 3) ? 5 : 2;
  CHECK(timing_failure_prob(results, 2, 1) == doctest::Approx(0.3));
  CHECK(timing_failure_prob(results, 2, 3) == doctest::Approx(0.3));
  CHECK(timing_failure_prob(results, 2, 4) == doctest::Approx(0.0));
  CHECK_THROWS_AS(timing_failure_prob({}, 0, 1), ConfigError);
  CHECK_THROWS_AS(timing_failure_prob(results, 0, 0), ConfigError);
}
