// SPDX-License-Identifier: Apache-2.0
#include "mimosync/signal_model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mimosync/rng.hpp"

namespace mimosync {

void SystemConfig::validate() const {
  if (n <= 0) throw ConfigError("subcarrier count must be positive");
  if (n_tx <= 0) throw ConfigError("tx antenna count must be positive");
  if (n_rx <= 0) throw ConfigError("rx antenna count must be positive");
  if (cir_len <= 0) throw ConfigError("cir length must be positive");
  if (ste_max < 0) throw ConfigError("ste_max must be nonnegative");
  if (cp_len <= cir_len + ste_max)
    throw ConfigError("cp_len must exceed cir_len + ste_max (" +
                      std::to_string(cp_len) + " <= " +
                      std::to_string(cir_len + ste_max) + ")");
  if (n < n_tx * (cir_len + ste_max))
    throw ConfigError("n must be at least n_tx * (cir_len + ste_max) (" +
                      std::to_string(n) + " < " +
                      std::to_string(n_tx * (cir_len + ste_max)) + ")");
  if (!(noise_var >= 0.0)) throw ConfigError("noise_var must be nonnegative");
}

ChannelProfile ChannelProfile::exponential(int n_taps, double decay_db) {
  if (n_taps <= 0) throw ConfigError("profile needs at least one tap");
  std::vector<double> p(static_cast<std::size_t>(n_taps));
  for (int l = 0; l < n_taps; ++l) p[l] = std::pow(10.0, -decay_db * l / 10.0);
  return from_powers(std::move(p));
}

ChannelProfile ChannelProfile::uniform(int n_taps) {
  return exponential(n_taps, 0.0);
}

ChannelProfile ChannelProfile::from_powers(std::vector<double> powers) {
  if (powers.empty()) throw ConfigError("profile needs at least one tap");
  double sum = 0.0;
  for (double p : powers) {
    if (!(p >= 0.0)) throw ConfigError("tap powers must be nonnegative");
    sum += p;
  }
  if (!(sum > 0.0)) throw ConfigError("tap powers must not all be zero");
  for (double& p : powers) p /= sum;
  ChannelProfile out;
  out.tap_powers = std::move(powers);
  return out;
}

void ChannelProfile::validate(int expected_taps) const {
  if (static_cast<int>(tap_powers.size()) != expected_taps)
    throw ConfigError("profile has " + std::to_string(tap_powers.size()) +
                      " taps, config expects " + std::to_string(expected_taps));
  double sum = 0.0;
  for (double p : tap_powers) {
    if (!(p >= 0.0)) throw ConfigError("tap powers must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("tap powers must sum to 1");
}

ChannelState::ChannelState(int n_tx, int n_rx, int cir_len)
    : n_tx_(n_tx), n_rx_(n_rx), cir_len_(cir_len) {
  if (n_tx <= 0 || n_rx <= 0 || cir_len <= 0)
    throw ConfigError("channel dimensions must be positive");
  h_ = CVector::Zero(static_cast<Eigen::Index>(n_tx) * n_rx * cir_len);
}

ChannelState ChannelState::from_stacked(const SystemConfig& cfg,
                                        const CVector& h) {
  if (h.size() != cfg.channel_dim())
    throw DimensionMismatch("stacked channel length " +
                            std::to_string(h.size()) + " vs expected " +
                            std::to_string(cfg.channel_dim()));
  ChannelState ch(cfg.n_tx, cfg.n_rx, cfg.cir_len);
  ch.h_ = h;
  return ch;
}

Complex& ChannelState::tap(int u, int v, int l) {
  return h_(((static_cast<Eigen::Index>(v) * n_tx_) + u) * cir_len_ + l);
}

Complex ChannelState::tap(int u, int v, int l) const {
  return h_(((static_cast<Eigen::Index>(v) * n_tx_) + u) * cir_len_ + l);
}

TrainingMatrix::TrainingMatrix(int n, int n_tx) {
  if (n <= 0 || n_tx <= 0)
    throw ConfigError("training dimensions must be positive");
  s_ = CMatrix::Ones(n, n_tx);
}

CMatrix TrainingMatrix::as_block() const {
  CMatrix x = CMatrix::Zero(s_.rows(), s_.rows() * s_.cols());
  for (Eigen::Index u = 0; u < s_.cols(); ++u)
    x.block(0, u * s_.rows(), s_.rows(), s_.rows()) = s_.col(u).asDiagonal();
  return x;
}

void TrainingMatrix::validate() const {
  for (Eigen::Index u = 0; u < s_.cols(); ++u)
    for (Eigen::Index k = 0; k < s_.rows(); ++k)
      if (std::abs(std::abs(s_(k, u)) - 1.0) > 1e-12)
        throw ConfigError("training symbol (" + std::to_string(k) + "," +
                          std::to_string(u) + ") is not unit modulus");
}

// ---- builders ---------------------------------------------------------------

CMatrix sfo_idft(const SystemConfig& cfg, double sfo) {
  const int n = cfg.n;
  CMatrix f1(n, n);
  const double step = 2.0 * M_PI * (1.0 + sfo) / n;
  for (int lt = 0; lt < n; ++lt)
    for (int k = 0; k < n; ++k)
      f1(lt, k) = std::polar(1.0 / n, step * k * lt);
  return f1;
}

CMatrix delay_dft(const SystemConfig& cfg, int n_taps, int first_delay) {
  const int n = cfg.n;
  if (n_taps <= 0 || n_taps > n)
    throw DimensionMismatch("delay_dft: tap count " + std::to_string(n_taps) +
                            " out of range for n=" + std::to_string(n));
  CMatrix f2(n, n_taps);
  const double step = -2.0 * M_PI / n;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n_taps; ++l)
      f2(k, l) = std::polar(1.0, step * k * (first_delay + l));
  return f2;
}

CMatrix cfo_rotation(const SystemConfig& cfg, double cfo, double sfo) {
  const int n = cfg.n;
  CVector d(n);
  const double step = 2.0 * M_PI * cfo * (1.0 + sfo) / n;
  for (int lt = 0; lt < n; ++lt) d(lt) = std::polar(1.0, step * lt);
  return d.asDiagonal();
}

CMatrix ste_rotation(const SystemConfig& cfg, int ste) {
  if (std::abs(ste) > cfg.ste_max)
    throw ConfigError("ste " + std::to_string(ste) + " exceeds ste_max " +
                      std::to_string(cfg.ste_max));
  const int n = cfg.n;
  CVector g(n);
  const double step = -2.0 * M_PI * ste / n;
  for (int k = 0; k < n; ++k) g(k) = std::polar(1.0, step * k);
  return g.asDiagonal();
}

namespace {

// X * (I kron F2-like): per tx antenna the training diagonal scales the rows
// of the delay DFT block. `f2` is n x taps.
CMatrix scaled_delay_blocks(const TrainingMatrix& x, const CMatrix& f2) {
  const Eigen::Index n = f2.rows();
  const Eigen::Index taps = f2.cols();
  CMatrix out(n, taps * x.n_tx());
  for (int u = 0; u < x.n_tx(); ++u) {
    for (Eigen::Index k = 0; k < n; ++k)
      out.block(k, u * taps, 1, taps) =
          x.symbol(u, static_cast<int>(k)) * f2.row(k);
  }
  return out;
}

void check_training(const SystemConfig& cfg, const TrainingMatrix& x) {
  if (x.n() != cfg.n || x.n_tx() != cfg.n_tx)
    throw DimensionMismatch("training is " + std::to_string(x.n()) + "x" +
                            std::to_string(x.n_tx()) + ", config expects " +
                            std::to_string(cfg.n) + "x" +
                            std::to_string(cfg.n_tx));
}

}  // namespace

CMatrix training_delay_block(const SystemConfig& cfg, const TrainingMatrix& x) {
  cfg.validate();
  check_training(cfg, x);
  return scaled_delay_blocks(x, delay_dft(cfg, cfg.cir_len));
}

CMatrix observation_matrix(const SystemConfig& cfg, const TrainingMatrix& x,
                           const Impairments& imp) {
  cfg.validate();
  check_training(cfg, x);
  const CMatrix per_antenna = cfo_rotation(cfg, imp.cfo, imp.sfo) *
                              (sfo_idft(cfg, imp.sfo) *
                               (ste_rotation(cfg, imp.ste) *
                                training_delay_block(cfg, x)));
  return kron(CMatrix::Identity(cfg.n_rx, cfg.n_rx), per_antenna);
}

CMatrix cfo_free_core(const SystemConfig& cfg, const TrainingMatrix& x,
                      double sfo, int pad_offset) {
  cfg.validate();
  check_training(cfg, x);
  if (pad_offset < 0 || pad_offset > cfg.ste_max)
    throw ConfigError("pad_offset " + std::to_string(pad_offset) +
                      " outside [0, ste_max]");
  const CMatrix f2pad = delay_dft(cfg, cfg.padded_len(), -pad_offset);
  return sfo_idft(cfg, sfo) * scaled_delay_blocks(x, f2pad);
}

CMatrix ste_free_observation(const SystemConfig& cfg, const TrainingMatrix& x,
                             double cfo, double sfo, int pad_offset) {
  const CMatrix per_antenna =
      cfo_rotation(cfg, cfo, sfo) * cfo_free_core(cfg, x, sfo, pad_offset);
  return kron(CMatrix::Identity(cfg.n_rx, cfg.n_rx), per_antenna);
}

CVector pad_stacked_channel(const SystemConfig& cfg, const ChannelState& ch,
                            int ste, int pad_offset) {
  if (ch.n_tx() != cfg.n_tx || ch.n_rx() != cfg.n_rx ||
      ch.cir_len() != cfg.cir_len)
    throw DimensionMismatch("channel dimensions do not match config");
  const int shifted = ste + pad_offset;
  if (shifted < 0 || shifted > cfg.ste_max)
    throw ConfigError("ste " + std::to_string(ste) + " with pad_offset " +
                      std::to_string(pad_offset) +
                      " falls outside the padded delay window");
  const int span = cfg.padded_len();
  CVector out = CVector::Zero(static_cast<Eigen::Index>(cfg.n_rx) * cfg.n_tx * span);
  for (int v = 0; v < cfg.n_rx; ++v)
    for (int u = 0; u < cfg.n_tx; ++u)
      for (int l = 0; l < cfg.cir_len; ++l)
        out(((static_cast<Eigen::Index>(v) * cfg.n_tx) + u) * span + shifted + l) =
            ch.tap(u, v, l);
  return out;
}

// ---- generators -------------------------------------------------------------

ReceivedSignal synthesize(const SystemConfig& cfg, const TrainingMatrix& x,
                          const Impairments& imp, const ChannelState& ch,
                          std::uint64_t seed) {
  cfg.validate();
  CVector r = observation_matrix(cfg, x, imp) * ch.stacked();
  if (cfg.noise_var > 0.0) {
    Rng rng(seed);
    const double scale = std::sqrt(cfg.noise_var);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) += scale * rng.cgaussian();
  }
  if (!r.allFinite()) throw ConfigError("synthesized signal is not finite");
  return ReceivedSignal{std::move(r)};
}

ChannelState generate_channel(const SystemConfig& cfg,
                              const ChannelProfile& profile,
                              std::uint64_t seed) {
  cfg.validate();
  profile.validate(cfg.cir_len);
  ChannelState ch(cfg.n_tx, cfg.n_rx, cfg.cir_len);
  Rng rng(seed);
  for (int v = 0; v < cfg.n_rx; ++v)
    for (int u = 0; u < cfg.n_tx; ++u)
      for (int l = 0; l < cfg.cir_len; ++l)
        ch.tap(u, v, l) = std::sqrt(profile.tap_powers[l]) * rng.cgaussian();
  return ch;
}

TrainingMatrix generate_training(const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrainingMatrix x(cfg.n, cfg.n_tx);
  Rng rng(seed);
  for (int u = 0; u < cfg.n_tx; ++u)
    for (int k = 0; k < cfg.n; ++k)
      x.symbol(u, k) = std::polar(1.0, M_PI / 4.0 + M_PI_2 * rng.pick(4));
  return x;
}

}  // namespace mimosync
