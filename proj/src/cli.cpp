// SPDX-License-Identifier: Apache-2.0
#include "mimosync/cli.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimosync/config_file.hpp"
#include "mimosync/errors.hpp"
#include "mimosync/estimators.hpp"
#include "mimosync/harness.hpp"
#include "mimosync/rng.hpp"
#include "mimosync/rx_file.hpp"

namespace mimosync {

namespace {

int exit_code_for(const Error& e) {
  if (e.code() == "E_CONFIG" || e.code() == "E_EMPTY_GRID") return 2;
  if (e.code() == "E_IO") return 3;
  return 4;  // rank/FIM/denominator/dimension failures
}

struct CommonFlags {
  std::string config_path;
  std::string out_path;      // empty = stdout
  std::string json_path;
  std::vector<double> snr;
  int n_trials = -1;
  std::vector<std::string> algos;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_run_overrides) {
  cmd->add_option("--config", f.config_path, "plan config file")->required();
  cmd->add_option("--out", f.out_path, "output path (default: stdout)");
  cmd->add_option_function<std::uint64_t>(
         "--seed", [&f](std::uint64_t v) { f.seed = v; f.seed_set = true; },
         "override the plan seed");
  cmd->add_flag("--quiet", f.quiet, "suppress progress messages");
  if (with_run_overrides) {
    cmd->add_option("--snr", f.snr, "override SNR sweep (dB)")->delimiter(',');
    cmd->add_option("--n-trials", f.n_trials, "override trial count");
    cmd->add_option("--algo", f.algos, "override algorithms (ml,mml,sml)")
        ->delimiter(',');
  }
}

ExperimentPlan load_overridden_plan(const CommonFlags& f) {
  ExperimentPlan plan = load_plan(f.config_path);
  if (f.seed_set) plan.seed = f.seed;
  if (!f.snr.empty()) plan.snr_db = f.snr;
  if (f.n_trials >= 0) plan.n_trials = f.n_trials;
  if (!f.algos.empty()) {
    plan.algorithms.clear();
    for (const std::string& name : f.algos)
      plan.algorithms.push_back(algorithm_from_name(name));
  }
  plan.validate();
  return plan;
}

// Writes via `emit` to the flag path, or to stdout when no path was given.
void write_output(const std::string& path,
                  const std::function<void(std::ostream&)>& emit) {
  if (path.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  emit(os);
  if (!os) throw IoError("short write to '" + path + "'");
}

void note(const CommonFlags& f, const std::string& msg) {
  if (!f.quiet) std::cerr << msg << "\n";
}

int run_simulate(const CommonFlags& f) {
  const ExperimentPlan plan = load_overridden_plan(f);
  note(f, "simulate: " + std::to_string(plan.snr_db.size()) +
              " SNR points x " + std::to_string(plan.n_trials) + " trials x " +
              std::to_string(plan.algorithms.size()) + " algorithms");
  const TrialReport report = run_experiment(plan);
  write_output(f.out_path, [&](std::ostream& os) { write_trial_csv(report, os); });
  if (!f.json_path.empty())
    write_output(f.json_path,
                 [&](std::ostream& os) { write_trial_json(report, os); });
  long failed = 0;
  for (const auto& s : report.stats) failed += s.n_failed;
  if (failed > 0)
    note(f, "simulate: " + std::to_string(failed) +
                " trial runs failed and were excluded");
  return 0;
}

int run_crlb(const CommonFlags& f) {
  const ConfigText cfg = ConfigText::parse_file(f.config_path);
  ExperimentPlan plan = plan_from_config(cfg);
  if (f.seed_set) plan.seed = f.seed;
  if (!f.snr.empty()) plan.snr_db = f.snr;
  plan.validate();
  const StudyOptions study = study_from_config(cfg, plan);
  const TrainingMatrix training = plan_training(plan);

  std::vector<double> noise_vars;
  for (double snr : plan.snr_db) {
    const double nv = snr_to_noise_var(plan.cfg, snr);
    if (nv <= 0.0)
      throw ConfigError("bound sweep needs finite SNR points, got " +
                        std::to_string(snr) + " dB");
    noise_vars.push_back(nv);
  }

  std::vector<CouplingRow> rows;
  for (int ste : study.crlb_ste_variants) {
    Impairments imp = plan.truth;
    imp.ste = ste;
    const std::vector<CrlbReport> reports =
        crlb_averaged(plan.cfg, training, imp, noise_vars,
                      plan.crlb_realizations, plan.profile,
                      Rng::derive(plan.seed, {5}));
    for (std::size_t i = 0; i < reports.size(); ++i)
      rows.push_back({ste, plan.snr_db[i], reports[i]});
  }
  write_output(f.out_path, [&](std::ostream& os) { write_crlb_csv(rows, os); });
  return 0;
}

int run_coupling(const CommonFlags& f) {
  const ConfigText cfg = ConfigText::parse_file(f.config_path);
  ExperimentPlan plan = plan_from_config(cfg);
  if (f.seed_set) plan.seed = f.seed;
  if (!f.snr.empty()) plan.snr_db = f.snr;
  plan.validate();
  const StudyOptions study = study_from_config(cfg, plan);
  const TrainingMatrix training = plan_training(plan);

  note(f, "coupling: timing offsets " + std::to_string(study.ste_a) + " and " +
              std::to_string(study.ste_b) + ", " +
              std::to_string(study.n_draws) + " channel draws");
  const CouplingStudy result = coupling_study(
      plan.cfg, training, plan.truth.cfo, plan.truth.sfo, study.ste_a,
      study.ste_b, plan.snr_db, study.n_draws, plan.profile, plan.seed);
  write_output(f.out_path,
               [&](std::ostream& os) { write_crlb_csv(result.rows, os); });

  nlohmann::json j;
  j["cfo_wc_vs_woc_db"] = result.cfo_wc_vs_woc_db;
  j["sfo_wc_vs_woc_db"] = result.sfo_wc_vs_woc_db;
  j["cfo_woc_ste_db"] = result.cfo_woc_ste_db;
  j["sfo_woc_ste_db"] = result.sfo_woc_ste_db;
  if (!f.json_path.empty())
    write_output(f.json_path, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  else if (f.out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    note(f, "coupling offsets: " + j.dump());
  return 0;
}

int run_estimate(const CommonFlags& f, const std::string& input_path,
                 const std::string& algo_name) {
  const ExperimentPlan plan = load_overridden_plan(f);
  const RxRecord rec = read_rx_file(input_path);
  if (rec.n != plan.cfg.n || rec.n_rx != plan.cfg.n_rx)
    throw DimensionMismatch(
        "'" + input_path + "' holds " + std::to_string(rec.n) + " samples x " +
        std::to_string(rec.n_rx) + " antennas, config expects " +
        std::to_string(plan.cfg.n) + " x " + std::to_string(plan.cfg.n_rx));

  const TrainingMatrix training = plan_training(plan);
  EstimatorOptions opts;
  opts.pad_offset = plan.pad_offset;
  const Algorithm algo = algorithm_from_name(algo_name);
  EstimationResult est;
  switch (algo) {
    case Algorithm::kMl:
      est = ml_estimate(plan.cfg, training, rec.recv, plan.grid, opts);
      break;
    case Algorithm::kMml:
      est = mml_estimate(plan.cfg, training, rec.recv, plan.grid, opts);
      break;
    case Algorithm::kSml:
      est = sml_estimate(plan.cfg, training, rec.recv, plan.grid, opts);
      break;
  }

  nlohmann::json j;
  j["algo"] = algorithm_name(est.algo);
  j["cfo_hat"] = est.cfo_hat;
  j["sfo_hat"] = est.sfo_hat;
  j["ste_hat"] = est.ste_hat;
  nlohmann::json taps = nlohmann::json::array();
  const CVector& h = est.ch_hat.stacked();
  for (Eigen::Index i = 0; i < h.size(); ++i)
    taps.push_back({h[i].real(), h[i].imag()});
  j["ch_hat"] = std::move(taps);
  j["search"] = {{"stage1_points", est.diag.stage1_points},
                 {"stage2_points", est.diag.stage2_points},
                 {"skipped_points", est.diag.skipped_points},
                 {"cfo_fit_in_range", est.diag.mml_cfo_in_range}};
  write_output(f.out_path, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"MIMO-OFDM joint synchronization and channel estimation"};
  app.require_subcommand(1);

  CommonFlags sim_f, crlb_f, est_f, coup_f;
  std::string est_input, est_algo = "ml";

  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte-Carlo SNR sweep, CSV per (snr, algorithm)");
  add_common(sim, sim_f, true);
  sim->add_option("--json", sim_f.json_path, "also write the full report as JSON");

  CLI::App* crlb = app.add_subcommand(
      "crlb", "estimation bound sweep, CSV per (timing offset, snr)");
  add_common(crlb, crlb_f, false);
  crlb->add_option("--snr", crlb_f.snr, "override SNR sweep (dB)")
      ->delimiter(',');

  CLI::App* est = app.add_subcommand(
      "estimate", "run one estimator on a recorded received vector");
  add_common(est, est_f, false);
  est->add_option("--input", est_input, "received-vector file")->required();
  est->add_option("--algo", est_algo, "estimator: ml, mml or sml");

  CLI::App* coup = app.add_subcommand(
      "coupling", "bound curves for two timing offsets plus their dB offsets");
  add_common(coup, coup_f, false);
  coup->add_option("--snr", coup_f.snr, "override SNR sweep (dB)")
      ->delimiter(',');
  coup->add_option("--json", coup_f.json_path, "write the offset summary as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_f);
    if (crlb->parsed()) return run_crlb(crlb_f);
    if (est->parsed()) return run_estimate(est_f, est_input, est_algo);
    if (coup->parsed()) return run_coupling(coup_f);
  } catch (const Error& e) {
    std::cerr << "error: [" << e.code() << "] " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: [E_INTERNAL] " << e.what() << "\n";
    return 4;
  }
  return 2;  // unreachable: require_subcommand guarantees one branch
}

}  // namespace mimosync
