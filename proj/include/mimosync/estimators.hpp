// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "mimosync/signal_model.hpp"

namespace mimosync {

enum class Algorithm { kMl, kMml, kSml };

const char* algorithm_name(Algorithm algo);        // "ml" / "mml" / "sml"
Algorithm algorithm_from_name(const std::string&); // throws ConfigError

// Rectangular search grid. CFO and SFO axes are uniform real grids; the
// timing axis is every integer in [lo, hi].
struct GridSpec {
  struct Range {
    double lo = 0.0, hi = 0.0, step = 0.0;
    int count() const;
    double value(int i) const { return lo + i * step; }
  };
  struct IntRange {
    int lo = 0, hi = 0;
    int count() const { return hi - lo + 1; }
    int value(int i) const { return lo + i; }
  };
  Range cfo, sfo;
  IntRange ste;

  void validate(const SystemConfig& cfg) const;
};

struct EstimatorOptions {
  int pad_offset = 0;  // recentering of the padded delay window
  double cond_ceiling = kConditionCeiling;
};

// Beyond this CFO magnitude the small-angle surrogate behind the MML closed
// form is outside its stated accuracy range; results are flagged, not
// rejected.
inline constexpr double kMmlCfoValidityLimit = 0.10;

struct SearchDiagnostics {
  long stage1_points = 0;  // joint-search grid points visited
  long stage2_points = 0;  // follow-up 1-D scan points
  long skipped_points = 0; // grid points dropped after a rank failure
  double stage1_cost = 0.0;
  double stage2_cost = 0.0;
  bool mml_cfo_in_range = true;
  long total_points() const { return stage1_points + stage2_points; }
};

struct EstimationResult {
  Algorithm algo = Algorithm::kMl;
  double cfo_hat = 0.0;
  double sfo_hat = 0.0;
  int ste_hat = 0;
  ChannelState ch_hat{1, 1, 1};
  SearchDiagnostics diag;
};

// Projection energy of r onto the timing-free padded model at (cfo, sfo):
// the joint-search objective.
double cost_cfo_sfo(const SystemConfig& cfg, const TrainingMatrix& x,
                    const CVector& r, double cfo, double sfo,
                    int pad_offset = 0);

// Projection energy of r onto the full observation model at (cfo, sfo, ste):
// the timing-search objective.
double cost_ste(const SystemConfig& cfg, const TrainingMatrix& x,
                const CVector& r, double cfo, double sfo, int ste);

// Closed-form CFO fit at one SFO hypothesis (the MML inner step) and the
// value of the quadratic surrogate cost at its minimizer. t0/t_lin/t_quad
// are the surrogate coefficients: cost(cfo) = t0 - 2 cfo t_lin + cfo^2 t_quad.
struct MmlCfoFit {
  double cfo_hat = 0.0;
  double cost = 0.0;
  double t0 = 0.0, t_lin = 0.0, t_quad = 0.0;
  double quad_at(double cfo) const {
    return t0 - 2.0 * cfo * t_lin + cfo * cfo * t_quad;
  }
};
MmlCfoFit mml_cfo_closed_form(const SystemConfig& cfg, const TrainingMatrix& x,
                              const CVector& r, double sfo, int pad_offset = 0);

// Exhaustive joint (cfo, sfo) grid search, then a 1-D timing scan, then a
// least-squares channel fit.
EstimationResult ml_estimate(const SystemConfig& cfg, const TrainingMatrix& x,
                             const CVector& r, const GridSpec& grid,
                             const EstimatorOptions& opts = {});

// SFO line search with the closed-form CFO per hypothesis (surrogate cost
// minimized), then the same timing scan and channel fit as ML.
EstimationResult mml_estimate(const SystemConfig& cfg, const TrainingMatrix& x,
                              const CVector& r, const GridSpec& grid,
                              const EstimatorOptions& opts = {});

// Stage 1: joint (cfo, ste) grid with the SFO pinned to zero. Stage 2: 1-D
// SFO scan at the stage-1 estimates. Channel fit at the final triple.
EstimationResult sml_estimate(const SystemConfig& cfg, const TrainingMatrix& x,
                              const CVector& r, const GridSpec& grid,
                              const EstimatorOptions& opts = {});

// Fraction of results whose timing estimate is at least p samples off.
double timing_failure_prob(const std::vector<EstimationResult>& results,
                           int true_ste, int p);

}  // namespace mimosync
