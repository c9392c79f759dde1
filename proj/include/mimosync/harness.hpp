// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mimosync/crlb.hpp"
#include "mimosync/estimators.hpp"

namespace mimosync {

// Full description of one Monte-Carlo experiment.
struct ExperimentPlan {
  SystemConfig cfg;
  GridSpec grid;
  Impairments truth;
  ChannelProfile profile;
  std::vector<double> snr_db;
  int n_trials = 1000;
  std::vector<Algorithm> algorithms = {Algorithm::kMl, Algorithm::kMml,
                                       Algorithm::kSml};
  std::uint64_t seed = 1;
  int crlb_realizations = 1000;
  int pad_offset = 0;
  bool redraw_training = false;  // fresh training block per trial

  void validate() const;
};

// Aggregated estimator statistics at one SNR point.
struct AlgoSnrStats {
  Algorithm algo = Algorithm::kMl;
  double snr_db = 0.0;
  double mse_cfo = 0.0;
  double mse_sfo = 0.0;
  double mse_ste = 0.0;
  double mse_ch = 0.0;
  double p_tf = 0.0;  // P[|ste_hat - ste| >= 1]
  int n_ok = 0;
  int n_failed = 0;
  double seconds_per_trial = 0.0;  // wall clock, diagnostics only
};

struct TrialReport {
  ExperimentPlan plan;
  std::vector<double> snr_db;
  std::vector<CrlbReport> crlb;          // one per SNR
  std::vector<AlgoSnrStats> stats;       // SNR-major, then plan algorithm order
  const AlgoSnrStats& at(int snr_index, Algorithm algo) const;
};

// Average-signal-energy SNR convention: snr = E||A h||^2 / (n n_rx sigma2)
// with unit-modulus training and a unit-energy tap profile, which makes the
// per-sample signal power n_tx / n.
double snr_to_noise_var(const SystemConfig& cfg, double snr_db);

// Mean squared error helpers: sum of squared (vector) errors over trials,
// divided by the trial count.
double mean_squared_error(const std::vector<double>& estimates, double truth);
double mean_squared_error(const std::vector<int>& estimates, int truth);
double mean_squared_error(const std::vector<CVector>& estimates,
                          const CVector& truth);

// Runs the plan: per SNR, `n_trials` independent channel and noise draws,
// every requested estimator on the same received vectors, plus
// channel-averaged bounds. Trials run on `n_threads` workers (0 = use
// MIMO_SYNC_THREADS or the hardware count); results are reduced in trial
// order so the report is identical no matter the thread count.
TrialReport run_experiment(const ExperimentPlan& plan, int n_threads = 0);

// The training block a plan uses: one seeded draw, shared by every trial
// unless the plan asks for per-trial redraws.
TrainingMatrix plan_training(const ExperimentPlan& plan);

// Bounds for two timing offsets at the same (cfo, sfo), averaged over
// channel draws, with the dB separations between the bound curves: how much
// extra SNR joint channel estimation costs (wc vs woc), and how much the
// timing offset moves the sync-only bounds. Bound curves scale linearly in
// the noise power, so each separation is SNR-independent.
struct CouplingRow {
  int ste = 0;
  double snr_db = 0.0;
  CrlbReport crlb;
};
struct CouplingStudy {
  std::vector<CouplingRow> rows;  // ste-major, SNR ascending
  double cfo_wc_vs_woc_db = 0.0;  // at the first timing offset
  double sfo_wc_vs_woc_db = 0.0;
  double cfo_woc_ste_db = 0.0;    // second vs first timing offset, sync-only
  double sfo_woc_ste_db = 0.0;
};
CouplingStudy coupling_study(const SystemConfig& cfg, const TrainingMatrix& x,
                             double cfo, double sfo, int ste_a, int ste_b,
                             const std::vector<double>& snr_db, int n_draws,
                             const ChannelProfile& profile, std::uint64_t seed);

// CSV emission. Numbers are printed with maximum double precision so equal
// runs produce byte-identical files.
void write_trial_csv(const TrialReport& report, std::ostream& os);
void write_crlb_csv(const std::vector<CouplingRow>& rows, std::ostream& os);
std::string trial_csv_header();

// JSON mirror of the full report (includes wall-clock diagnostics).
void write_trial_json(const TrialReport& report, std::ostream& os);

}  // namespace mimosync
