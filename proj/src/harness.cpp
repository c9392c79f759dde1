// SPDX-License-Identifier: Apache-2.0
#include "mimosync/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "mimosync/rng.hpp"

namespace mimosync {

void ExperimentPlan::validate() const {
  cfg.validate();
  grid.validate(cfg);
  profile.validate(cfg.cir_len);
  if (std::abs(truth.ste) > cfg.ste_max)
    throw ConfigError("true ste exceeds ste_max");
  if (pad_offset < 0 || pad_offset > cfg.ste_max)
    throw ConfigError("pad_offset outside [0, ste_max]");
  if (snr_db.empty()) throw ConfigError("snr list is empty");
  if (n_trials <= 0) throw ConfigError("n_trials must be positive");
  if (algorithms.empty()) throw ConfigError("algorithm list is empty");
  if (crlb_realizations <= 0)
    throw ConfigError("crlb_realizations must be positive");
}

double snr_to_noise_var(const SystemConfig& cfg, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
  const double signal_power = static_cast<double>(cfg.n_tx) / cfg.n;
  return signal_power * std::pow(10.0, -snr_db / 10.0);
}

double mean_squared_error(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) throw ConfigError("no estimates to average");
  double acc = 0.0;
  for (double e : estimates) acc += (e - truth) * (e - truth);
  return acc / static_cast<double>(estimates.size());
}

double mean_squared_error(const std::vector<int>& estimates, int truth) {
  if (estimates.empty()) throw ConfigError("no estimates to average");
  double acc = 0.0;
  for (int e : estimates) {
    const double d = static_cast<double>(e - truth);
    acc += d * d;
  }
  return acc / static_cast<double>(estimates.size());
}

double mean_squared_error(const std::vector<CVector>& estimates,
                          const CVector& truth) {
  if (estimates.empty()) throw ConfigError("no estimates to average");
  double acc = 0.0;
  for (const CVector& e : estimates) {
    if (e.size() != truth.size())
      throw DimensionMismatch("estimate/truth length mismatch");
    acc += (e - truth).squaredNorm();
  }
  return acc / static_cast<double>(estimates.size());
}

const AlgoSnrStats& TrialReport::at(int snr_index, Algorithm algo) const {
  const int n_algo = static_cast<int>(plan.algorithms.size());
  for (int a = 0; a < n_algo; ++a)
    if (plan.algorithms[a] == algo)
      return stats[static_cast<std::size_t>(snr_index) * n_algo + a];
  throw ConfigError("algorithm not part of the plan");
}

namespace {

int resolve_threads(int requested, int n_jobs) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("MIMO_SYNC_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  return std::min(n, std::max(1, n_jobs));
}

// Runs fn(i) for i in [0, n) on a small worker pool. The first exception is
// rethrown on the calling thread after all workers finish.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct TrialCell {
  bool ok = false;
  double se_cfo = 0.0, se_sfo = 0.0, se_ste = 0.0, se_ch = 0.0;
  bool tf = false;
  double seconds = 0.0;
};

EstimationResult run_algorithm(Algorithm algo, const SystemConfig& cfg,
                               const TrainingMatrix& x, const CVector& r,
                               const GridSpec& grid,
                               const EstimatorOptions& opts) {
  switch (algo) {
    case Algorithm::kMl: return ml_estimate(cfg, x, r, grid, opts);
    case Algorithm::kMml: return mml_estimate(cfg, x, r, grid, opts);
    case Algorithm::kSml: return sml_estimate(cfg, x, r, grid, opts);
  }
  throw ConfigError("unknown algorithm");
}

void append_double(std::string& row, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  row += buf;
}

}  // namespace

TrainingMatrix plan_training(const ExperimentPlan& plan) {
  return generate_training(plan.cfg, Rng::derive(plan.seed, {7}));
}

TrialReport run_experiment(const ExperimentPlan& plan, int n_threads) {
  plan.validate();
  TrialReport report;
  report.plan = plan;
  report.snr_db = plan.snr_db;

  const TrainingMatrix base_training = plan_training(plan);

  // Channel-averaged bounds, shared channel draws across the SNR sweep.
  std::vector<double> noise_vars(plan.snr_db.size());
  for (std::size_t i = 0; i < plan.snr_db.size(); ++i)
    noise_vars[i] = snr_to_noise_var(plan.cfg, plan.snr_db[i]);
  std::vector<double> positive;
  for (double nv : noise_vars)
    if (nv > 0.0) positive.push_back(nv);
  std::vector<CrlbReport> positive_reports;
  if (!positive.empty())
    positive_reports =
        crlb_averaged(plan.cfg, base_training, plan.truth, positive,
                      plan.crlb_realizations, plan.profile,
                      Rng::derive(plan.seed, {5}));
  std::size_t pos_idx = 0;
  for (double nv : noise_vars)
    report.crlb.push_back(nv > 0.0 ? positive_reports[pos_idx++]
                                   : CrlbReport{});  // exact zero-noise limit

  const int n_algo = static_cast<int>(plan.algorithms.size());
  const int threads = resolve_threads(n_threads, plan.n_trials);
  const EstimatorOptions opts{plan.pad_offset, kConditionCeiling};

  for (std::size_t si = 0; si < plan.snr_db.size(); ++si) {
    SystemConfig cfg = plan.cfg;
    cfg.noise_var = noise_vars[si];

    std::vector<TrialCell> cells(
        static_cast<std::size_t>(plan.n_trials) * n_algo);
    parallel_for(plan.n_trials, threads, [&](int ti) {
      const ChannelState ch = generate_channel(
          cfg, plan.profile, Rng::derive(plan.seed, {1, si, (std::uint64_t)ti}));
      const TrainingMatrix training =
          plan.redraw_training
              ? generate_training(cfg,
                                  Rng::derive(plan.seed, {3, si, (std::uint64_t)ti}))
              : base_training;
      const ReceivedSignal rx = synthesize(
          cfg, training, plan.truth, ch,
          Rng::derive(plan.seed, {2, si, (std::uint64_t)ti}));
      for (int a = 0; a < n_algo; ++a) {
        TrialCell& cell = cells[static_cast<std::size_t>(ti) * n_algo + a];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const EstimationResult res = run_algorithm(
              plan.algorithms[a], cfg, training, rx.samples, plan.grid, opts);
          cell.ok = true;
          cell.se_cfo = (res.cfo_hat - plan.truth.cfo) *
                        (res.cfo_hat - plan.truth.cfo);
          cell.se_sfo = (res.sfo_hat - plan.truth.sfo) *
                        (res.sfo_hat - plan.truth.sfo);
          const double dste = res.ste_hat - plan.truth.ste;
          cell.se_ste = dste * dste;
          cell.se_ch = (res.ch_hat.stacked() - ch.stacked()).squaredNorm();
          cell.tf = std::abs(res.ste_hat - plan.truth.ste) >= 1;
        } catch (const Error&) {
          cell.ok = false;
        }
        cell.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
      }
    });

    // Reduce in trial order so thread scheduling cannot change the sums.
    for (int a = 0; a < n_algo; ++a) {
      AlgoSnrStats st;
      st.algo = plan.algorithms[a];
      st.snr_db = plan.snr_db[si];
      double sec = 0.0;
      long tf_count = 0;
      for (int ti = 0; ti < plan.n_trials; ++ti) {
        const TrialCell& cell = cells[static_cast<std::size_t>(ti) * n_algo + a];
        sec += cell.seconds;
        if (!cell.ok) {
          ++st.n_failed;
          continue;
        }
        ++st.n_ok;
        st.mse_cfo += cell.se_cfo;
        st.mse_sfo += cell.se_sfo;
        st.mse_ste += cell.se_ste;
        st.mse_ch += cell.se_ch;
        if (cell.tf) ++tf_count;
      }
      if (st.n_ok > 0) {
        st.mse_cfo /= st.n_ok;
        st.mse_sfo /= st.n_ok;
        st.mse_ste /= st.n_ok;
        st.mse_ch /= st.n_ok;
        st.p_tf = static_cast<double>(tf_count) / st.n_ok;
        st.seconds_per_trial = sec / st.n_ok;
      }
      report.stats.push_back(st);
    }
  }
  return report;
}

CouplingStudy coupling_study(const SystemConfig& cfg, const TrainingMatrix& x,
                             double cfo, double sfo, int ste_a, int ste_b,
                             const std::vector<double>& snr_db, int n_draws,
                             const ChannelProfile& profile,
                             std::uint64_t seed) {
  if (snr_db.empty()) throw ConfigError("snr list is empty");
  std::vector<double> noise_vars(snr_db.size());
  for (std::size_t i = 0; i < snr_db.size(); ++i) {
    noise_vars[i] = snr_to_noise_var(cfg, snr_db[i]);
    if (!(noise_vars[i] > 0.0))
      throw ConfigError("coupling study needs finite SNR points");
  }
  CouplingStudy out;
  std::vector<CrlbReport> first;
  // Both timing offsets share the same channel draws (same seed), so the
  // separations are a paired comparison.
  for (int which = 0; which < 2; ++which) {
    const int ste = (which == 0) ? ste_a : ste_b;
    const Impairments imp{cfo, sfo, ste};
    const std::vector<CrlbReport> reports =
        crlb_averaged(cfg, x, imp, noise_vars, n_draws, profile, seed);
    for (std::size_t i = 0; i < snr_db.size(); ++i)
      out.rows.push_back({ste, snr_db[i], reports[i]});
    if (which == 0) first = reports;
    if (which == 1) {
      // Bounds scale linearly in the noise power, so a fixed bound-value
      // ratio is a fixed horizontal (SNR) separation between the curves.
      out.cfo_wc_vs_woc_db = 10.0 * std::log10(first[0].cfo_wc / first[0].cfo_woc);
      out.sfo_wc_vs_woc_db = 10.0 * std::log10(first[0].sfo_wc / first[0].sfo_woc);
      out.cfo_woc_ste_db =
          10.0 * std::log10(reports[0].cfo_woc / first[0].cfo_woc);
      out.sfo_woc_ste_db =
          10.0 * std::log10(reports[0].sfo_woc / first[0].sfo_woc);
    }
  }
  return out;
}

std::string trial_csv_header() {
  return "snr_db,algo,mse_eps,mse_eta,mse_theta,mse_h,p_tf,crlb_eps_woc,"
         "crlb_eps_wc,crlb_eta_woc,crlb_eta_wc,crlb_h_trace,n_ok,n_failed";
}

void write_trial_csv(const TrialReport& report, std::ostream& os) {
  os << trial_csv_header() << "\n";
  const int n_algo = static_cast<int>(report.plan.algorithms.size());
  for (std::size_t si = 0; si < report.snr_db.size(); ++si) {
    for (int a = 0; a < n_algo; ++a) {
      const AlgoSnrStats& st = report.stats[si * n_algo + a];
      const CrlbReport& crlb = report.crlb[si];
      std::string row;
      append_double(row, st.snr_db);
      row += ",";
      row += algorithm_name(st.algo);
      for (double v : {st.mse_cfo, st.mse_sfo, st.mse_ste, st.mse_ch, st.p_tf,
                       crlb.cfo_woc, crlb.cfo_wc, crlb.sfo_woc, crlb.sfo_wc,
                       crlb.ch_trace}) {
        row += ",";
        append_double(row, v);
      }
      row += "," + std::to_string(st.n_ok) + "," + std::to_string(st.n_failed);
      os << row << "\n";
    }
  }
}

void write_crlb_csv(const std::vector<CouplingRow>& rows, std::ostream& os) {
  os << "snr_db,crlb_eps_woc,crlb_eps_wc,crlb_eta_woc,crlb_eta_wc,"
        "crlb_h_trace,theta\n";
  for (const CouplingRow& row : rows) {
    std::string line;
    append_double(line, row.snr_db);
    for (double v : {row.crlb.cfo_woc, row.crlb.cfo_wc, row.crlb.sfo_woc,
                     row.crlb.sfo_wc, row.crlb.ch_trace}) {
      line += ",";
      append_double(line, v);
    }
    line += "," + std::to_string(row.ste);
    os << line << "\n";
  }
}

void write_trial_json(const TrialReport& report, std::ostream& os) {
  nlohmann::json j;
  j["n_trials"] = report.plan.n_trials;
  j["seed"] = report.plan.seed;
  j["snr_db"] = report.snr_db;
  j["rows"] = nlohmann::json::array();
  const int n_algo = static_cast<int>(report.plan.algorithms.size());
  for (std::size_t si = 0; si < report.snr_db.size(); ++si) {
    for (int a = 0; a < n_algo; ++a) {
      const AlgoSnrStats& st = report.stats[si * n_algo + a];
      const CrlbReport& crlb = report.crlb[si];
      nlohmann::json row;
      row["snr_db"] = st.snr_db;
      row["algo"] = algorithm_name(st.algo);
      row["mse_eps"] = st.mse_cfo;
      row["mse_eta"] = st.mse_sfo;
      row["mse_theta"] = st.mse_ste;
      row["mse_h"] = st.mse_ch;
      row["p_tf"] = st.p_tf;
      row["crlb_eps_woc"] = crlb.cfo_woc;
      row["crlb_eps_wc"] = crlb.cfo_wc;
      row["crlb_eta_woc"] = crlb.sfo_woc;
      row["crlb_eta_wc"] = crlb.sfo_wc;
      row["crlb_h_trace"] = crlb.ch_trace;
      row["n_ok"] = st.n_ok;
      row["n_failed"] = st.n_failed;
      row["seconds_per_trial"] = st.seconds_per_trial;
      j["rows"].push_back(row);
    }
  }
  os << j.dump(2) << "\n";
}

}  // namespace mimosync
