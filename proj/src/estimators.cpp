// SPDX-License-Identifier: Apache-2.0
#include "mimosync/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace mimosync {

const char* algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kMl: return "ml";
    case Algorithm::kMml: return "mml";
    case Algorithm::kSml: return "sml";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "ml") return Algorithm::kMl;
  if (lower == "mml") return Algorithm::kMml;
  if (lower == "sml") return Algorithm::kSml;
  throw ConfigError("unknown algorithm '" + name + "' (expected ml, mml, sml)");
}

int GridSpec::Range::count() const {
  if (!(step > 0.0) || hi < lo) return 0;
  // Nudge against representation error so exact multiples land on the grid.
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

void GridSpec::validate(const SystemConfig& cfg) const {
  if (cfo.count() < 1) throw EmptyGrid("cfo grid is empty");
  if (sfo.count() < 1) throw EmptyGrid("sfo grid is empty");
  if (ste.count() < 1) throw EmptyGrid("ste grid is empty");
  if (ste.lo < -cfg.ste_max || ste.hi > cfg.ste_max)
    throw ConfigError("ste grid [" + std::to_string(ste.lo) + ", " +
                      std::to_string(ste.hi) + "] exceeds ste_max " +
                      std::to_string(cfg.ste_max));
}

namespace {

void check_received(const SystemConfig& cfg, const CVector& r) {
  if (r.size() != cfg.recv_dim())
    throw DimensionMismatch("received vector length " +
                            std::to_string(r.size()) + " vs expected " +
                            std::to_string(cfg.recv_dim()));
}

// conj(CFO ramp) as a vector, applied per rx antenna before projecting onto
// a CFO-free basis: projection energy through a unitary diagonal equals the
// energy of the derotated vector through the bare basis.
CVector cfo_derotation(int n, double cfo, double sfo) {
  CVector d(n);
  const double step = -2.0 * M_PI * cfo * (1.0 + sfo) / n;
  for (int lt = 0; lt < n; ++lt) d(lt) = std::polar(1.0, step * lt);
  return d;
}

// Per-antenna kernel of the full observation model at one hypothesis.
CMatrix full_kernel(const SystemConfig& cfg, const TrainingMatrix& x,
                    double cfo, double sfo, int ste) {
  return cfo_rotation(cfg, cfo, sfo) *
         (sfo_idft(cfg, sfo) *
          (ste_rotation(cfg, ste) * training_delay_block(cfg, x)));
}

double projected_energy_per_antenna(const SystemConfig& cfg,
                                    const ProjectionSolver& solver,
                                    const CVector& r) {
  double j = 0.0;
  for (int v = 0; v < cfg.n_rx; ++v)
    j += solver.project_energy(r.segment(static_cast<Eigen::Index>(v) * cfg.n,
                                         cfg.n));
  return j;
}

double derotated_energy_per_antenna(const SystemConfig& cfg,
                                    const ProjectionSolver& solver,
                                    const CVector& r, const CVector& derot) {
  double j = 0.0;
  for (int v = 0; v < cfg.n_rx; ++v) {
    const CVector z =
        derot.cwiseProduct(r.segment(static_cast<Eigen::Index>(v) * cfg.n, cfg.n));
    j += solver.project_energy(z);
  }
  return j;
}

struct StePick {
  int ste = 0;
  double cost = 0.0;
  long skipped = 0;
};

// Ascending scan of the integer timing grid at fixed (cfo, sfo); first
// maximum wins ties. Rank-deficient hypotheses are skipped and counted.
StePick scan_ste(const SystemConfig& cfg, const TrainingMatrix& x,
                 const CVector& r, const GridSpec::IntRange& grid, double cfo,
                 double sfo, double cond_ceiling) {
  StePick best;
  bool found = false;
  double best_cost = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid.count(); ++k) {
    const int ste = grid.value(k);
    std::optional<ProjectionSolver> solver;
    try {
      solver.emplace(full_kernel(cfg, x, cfo, sfo, ste), cond_ceiling);
    } catch (const RankDeficient&) {
      ++best.skipped;
      continue;
    }
    const double j = projected_energy_per_antenna(cfg, *solver, r);
    if (!found || j > best_cost) {
      found = true;
      best_cost = j;
      best.ste = ste;
    }
  }
  if (!found) throw RankDeficient("every timing hypothesis was rank deficient");
  best.cost = best_cost;
  return best;
}

ChannelState fit_channel(const SystemConfig& cfg, const TrainingMatrix& x,
                         const CVector& r, double cfo, double sfo, int ste,
                         double cond_ceiling) {
  const CMatrix a = observation_matrix(cfg, x, {cfo, sfo, ste});
  return ChannelState::from_stacked(cfg, pinv(a, cond_ceiling) * r);
}

struct MmlTerms {
  double t0 = 0.0, t_lin = 0.0, t_quad = 0.0;
};

// Surrogate cost coefficients at one SFO hypothesis. With Q the projector
// onto the orthogonal complement of the padded CFO-free model and c the
// per-sample phase-slope weights, the derotated residual energy as a
// function of the CFO is approximated by
//   t0 - 2 cfo t_lin + cfo^2 t_quad,
// t0 = r^H Q r, t_lin = Im(sum c r~ Qr), t_quad = (c o r)^H Q (c o r).
MmlTerms mml_terms(const SystemConfig& cfg, const ProjectionSolver& solver,
                   const CVector& r, double sfo) {
  MmlTerms t;
  const double k_cfo = 2.0 * M_PI * (1.0 + sfo) / cfg.n;
  CVector c(cfg.n);
  for (int lt = 0; lt < cfg.n; ++lt) c(lt) = Complex(k_cfo * lt, 0.0);
  for (int v = 0; v < cfg.n_rx; ++v) {
    const CVector rv = r.segment(static_cast<Eigen::Index>(v) * cfg.n, cfg.n);
    const CVector y = solver.residual(rv);
    const CVector cr = c.cwiseProduct(rv);
    t.t0 += (rv.dot(y)).real();
    t.t_lin += (cr.dot(y)).imag();
    t.t_quad += (cr.dot(solver.residual(cr))).real();
  }
  return t;
}

MmlCfoFit fit_from_terms(const MmlTerms& t, double scale_hint) {
  if (!(t.t_quad > 1e-16 * std::max(scale_hint, 1e-300)))
    throw ZeroDenominator("degenerate received vector: quadratic term " +
                          std::to_string(t.t_quad));
  MmlCfoFit fit;
  fit.t0 = t.t0;
  fit.t_lin = t.t_lin;
  fit.t_quad = t.t_quad;
  fit.cfo_hat = t.t_lin / t.t_quad;
  fit.cost = fit.quad_at(fit.cfo_hat);
  return fit;
}

}  // namespace

double cost_cfo_sfo(const SystemConfig& cfg, const TrainingMatrix& x,
                    const CVector& r, double cfo, double sfo, int pad_offset) {
  check_received(cfg, r);
  const ProjectionSolver solver(cfo_free_core(cfg, x, sfo, pad_offset));
  return derotated_energy_per_antenna(cfg, solver, r,
                                      cfo_derotation(cfg.n, cfo, sfo));
}

double cost_ste(const SystemConfig& cfg, const TrainingMatrix& x,
                const CVector& r, double cfo, double sfo, int ste) {
  check_received(cfg, r);
  const ProjectionSolver solver(full_kernel(cfg, x, cfo, sfo, ste));
  return projected_energy_per_antenna(cfg, solver, r);
}

MmlCfoFit mml_cfo_closed_form(const SystemConfig& cfg, const TrainingMatrix& x,
                              const CVector& r, double sfo, int pad_offset) {
  check_received(cfg, r);
  const ProjectionSolver solver(cfo_free_core(cfg, x, sfo, pad_offset));
  const MmlTerms t = mml_terms(cfg, solver, r, sfo);
  return fit_from_terms(t, r.squaredNorm());
}

EstimationResult ml_estimate(const SystemConfig& cfg, const TrainingMatrix& x,
                             const CVector& r, const GridSpec& grid,
                             const EstimatorOptions& opts) {
  cfg.validate();
  grid.validate(cfg);
  check_received(cfg, r);

  EstimationResult out;
  out.algo = Algorithm::kMl;
  const int g_cfo = grid.cfo.count();
  const int g_sfo = grid.sfo.count();
  out.diag.stage1_points = static_cast<long>(g_cfo) * g_sfo;

  // SFO-outer order so the padded-model factorization is shared across the
  // whole CFO axis. The winner is the lexicographically first (cfo index,
  // sfo index) maximum, matching a cfo-major scan.
  bool found = false;
  double best_j = -std::numeric_limits<double>::infinity();
  int best_i = 0, best_j_idx = 0;
  for (int j = 0; j < g_sfo; ++j) {
    const double sfo = grid.sfo.value(j);
    std::optional<ProjectionSolver> solver;
    try {
      solver.emplace(cfo_free_core(cfg, x, sfo, opts.pad_offset),
                     opts.cond_ceiling);
    } catch (const RankDeficient&) {
      out.diag.skipped_points += g_cfo;
      continue;
    }
    for (int i = 0; i < g_cfo; ++i) {
      const double cfo = grid.cfo.value(i);
      const double cost = derotated_energy_per_antenna(
          cfg, *solver, r, cfo_derotation(cfg.n, cfo, sfo));
      const bool better =
          !found || cost > best_j ||
          (cost == best_j &&
           (i < best_i || (i == best_i && j < best_j_idx)));
      if (better) {
        found = true;
        best_j = cost;
        best_i = i;
        best_j_idx = j;
      }
    }
  }
  if (!found)
    throw RankDeficient("every (cfo, sfo) hypothesis was rank deficient");
  out.cfo_hat = grid.cfo.value(best_i);
  out.sfo_hat = grid.sfo.value(best_j_idx);
  out.diag.stage1_cost = best_j;

  const StePick pick = scan_ste(cfg, x, r, grid.ste, out.cfo_hat, out.sfo_hat,
                                opts.cond_ceiling);
  out.ste_hat = pick.ste;
  out.diag.stage2_points = grid.ste.count();
  out.diag.stage2_cost = pick.cost;
  out.diag.skipped_points += pick.skipped;

  out.ch_hat = fit_channel(cfg, x, r, out.cfo_hat, out.sfo_hat, out.ste_hat,
                           opts.cond_ceiling);
  return out;
}

EstimationResult mml_estimate(const SystemConfig& cfg, const TrainingMatrix& x,
                              const CVector& r, const GridSpec& grid,
                              const EstimatorOptions& opts) {
  cfg.validate();
  grid.validate(cfg);
  check_received(cfg, r);

  EstimationResult out;
  out.algo = Algorithm::kMml;
  const int g_sfo = grid.sfo.count();
  out.diag.stage1_points = g_sfo;

  const double scale_hint = r.squaredNorm();
  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_cfo = 0.0, best_sfo = 0.0;
  for (int j = 0; j < g_sfo; ++j) {
    const double sfo = grid.sfo.value(j);
    MmlCfoFit fit;
    try {
      const ProjectionSolver solver(cfo_free_core(cfg, x, sfo, opts.pad_offset),
                                    opts.cond_ceiling);
      fit = fit_from_terms(mml_terms(cfg, solver, r, sfo), scale_hint);
    } catch (const RankDeficient&) {
      ++out.diag.skipped_points;
      continue;
    } catch (const ZeroDenominator&) {
      ++out.diag.skipped_points;
      continue;
    }
    // Ascending scan; strict improvement keeps the lowest index on ties.
    if (!found || fit.cost < best_cost) {
      found = true;
      best_cost = fit.cost;
      best_cfo = fit.cfo_hat;
      best_sfo = sfo;
    }
  }
  if (!found) throw RankDeficient("every sfo hypothesis was skipped");
  out.cfo_hat = best_cfo;
  out.sfo_hat = best_sfo;
  out.diag.stage1_cost = best_cost;
  out.diag.mml_cfo_in_range = std::abs(best_cfo) <= kMmlCfoValidityLimit;

  const StePick pick = scan_ste(cfg, x, r, grid.ste, out.cfo_hat, out.sfo_hat,
                                opts.cond_ceiling);
  out.ste_hat = pick.ste;
  out.diag.stage2_points = grid.ste.count();
  out.diag.stage2_cost = pick.cost;
  out.diag.skipped_points += pick.skipped;

  out.ch_hat = fit_channel(cfg, x, r, out.cfo_hat, out.sfo_hat, out.ste_hat,
                           opts.cond_ceiling);
  return out;
}

EstimationResult sml_estimate(const SystemConfig& cfg, const TrainingMatrix& x,
                              const CVector& r, const GridSpec& grid,
                              const EstimatorOptions& opts) {
  cfg.validate();
  grid.validate(cfg);
  check_received(cfg, r);

  EstimationResult out;
  out.algo = Algorithm::kSml;
  const int g_cfo = grid.cfo.count();
  const int g_ste = grid.ste.count();
  out.diag.stage1_points = static_cast<long>(g_cfo) * g_ste;

  // Stage 1: joint (cfo, ste) with the SFO hypothesis pinned to zero.
  // Timing-outer order shares each timing factorization across the CFO axis;
  // the comparator keeps the lexicographically first (cfo, ste) maximum.
  bool found = false;
  double best_j = -std::numeric_limits<double>::infinity();
  int best_i = 0, best_k = 0;
  for (int k = 0; k < g_ste; ++k) {
    const int ste = grid.ste.value(k);
    std::optional<ProjectionSolver> solver;
    try {
      solver.emplace(full_kernel(cfg, x, 0.0, 0.0, ste), opts.cond_ceiling);
    } catch (const RankDeficient&) {
      out.diag.skipped_points += g_cfo;
      continue;
    }
    for (int i = 0; i < g_cfo; ++i) {
      const double cfo = grid.cfo.value(i);
      const double cost = derotated_energy_per_antenna(
          cfg, *solver, r, cfo_derotation(cfg.n, cfo, 0.0));
      const bool better =
          !found || cost > best_j ||
          (cost == best_j && (i < best_i || (i == best_i && k < best_k)));
      if (better) {
        found = true;
        best_j = cost;
        best_i = i;
        best_k = k;
      }
    }
  }
  if (!found)
    throw RankDeficient("every (cfo, ste) hypothesis was rank deficient");
  out.cfo_hat = grid.cfo.value(best_i);
  out.ste_hat = grid.ste.value(best_k);
  out.diag.stage1_cost = best_j;

  // Stage 2: SFO line search at the stage-1 estimates.
  bool found2 = false;
  double best_j2 = -std::numeric_limits<double>::infinity();
  int best_jj = 0;
  const int g_sfo = grid.sfo.count();
  for (int j = 0; j < g_sfo; ++j) {
    const double sfo = grid.sfo.value(j);
    double cost = 0.0;
    try {
      const ProjectionSolver solver(
          full_kernel(cfg, x, out.cfo_hat, sfo, out.ste_hat),
          opts.cond_ceiling);
      cost = projected_energy_per_antenna(cfg, solver, r);
    } catch (const RankDeficient&) {
      ++out.diag.skipped_points;
      continue;
    }
    if (!found2 || cost > best_j2) {
      found2 = true;
      best_j2 = cost;
      best_jj = j;
    }
  }
  if (!found2) throw RankDeficient("every sfo hypothesis was rank deficient");
  out.sfo_hat = grid.sfo.value(best_jj);
  out.diag.stage2_points = g_sfo;
  out.diag.stage2_cost = best_j2;

  out.ch_hat = fit_channel(cfg, x, r, out.cfo_hat, out.sfo_hat, out.ste_hat,
                           opts.cond_ceiling);
  return out;
}

double timing_failure_prob(const std::vector<EstimationResult>& results,
                           int true_ste, int p) {
  if (results.empty()) throw ConfigError("no results to evaluate");
  if (p < 1) throw ConfigError("failure threshold p must be at least 1");
  long failures = 0;
  for (const auto& res : results)
    if (std::abs(res.ste_hat - true_ste) >= p) ++failures;
  return static_cast<double>(failures) / static_cast<double>(results.size());
}

}  // namespace mimosync
