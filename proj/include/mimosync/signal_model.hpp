// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mimosync/numerics.hpp"

namespace mimosync {

// Static dimensions of one MIMO-OFDM training block.
struct SystemConfig {
  int n = 0;          // subcarriers per OFDM symbol
  int n_tx = 0;       // transmit antennas
  int n_rx = 0;       // receive antennas
  int cir_len = 0;    // channel impulse response taps per link
  int ste_max = 0;    // largest symbol timing error magnitude the model absorbs
  int cp_len = 0;     // cyclic prefix length
  double noise_var = 0.0;  // complex noise variance per received sample

  int padded_len() const { return cir_len + ste_max; }      // taps + timing slack
  int channel_dim() const { return n_rx * n_tx * cir_len; } // stacked CIR length
  int recv_dim() const { return n * n_rx; }                 // stacked rx length

  // Throws ConfigError naming the violated constraint.
  void validate() const;
};

// True (or hypothesized) synchronization impairments.
struct Impairments {
  double cfo = 0.0;  // carrier frequency offset, normalized to subcarrier spacing
  double sfo = 0.0;  // sampling frequency offset, relative clock error
  int ste = 0;       // symbol timing error, whole samples
};

// Per-tap average power profile shared by every tx/rx link.
struct ChannelProfile {
  std::vector<double> tap_powers;  // normalized to sum to 1

  // Exponentially decaying profile, `decay_db` dB drop per tap.
  static ChannelProfile exponential(int n_taps, double decay_db);
  static ChannelProfile uniform(int n_taps);
  static ChannelProfile from_powers(std::vector<double> powers);

  void validate(int expected_taps) const;
};

// CIR taps for every (tx u, rx v) link, stored in the stacked order used by
// the linear model: rx-major, then tx, then tap.
class ChannelState {
 public:
  ChannelState(int n_tx, int n_rx, int cir_len);
  static ChannelState from_stacked(const SystemConfig& cfg, const CVector& h);

  Complex& tap(int u, int v, int l);
  Complex tap(int u, int v, int l) const;
  const CVector& stacked() const noexcept { return h_; }

  int n_tx() const noexcept { return n_tx_; }
  int n_rx() const noexcept { return n_rx_; }
  int cir_len() const noexcept { return cir_len_; }

 private:
  int n_tx_, n_rx_, cir_len_;
  CVector h_;  // index ((v * n_tx) + u) * cir_len + l
};

// Frequency-domain training symbols, one column per tx antenna, all unit
// modulus.
class TrainingMatrix {
 public:
  TrainingMatrix(int n, int n_tx);

  Complex& symbol(int u, int k) { return s_(k, u); }
  Complex symbol(int u, int k) const { return s_(k, u); }

  int n() const noexcept { return static_cast<int>(s_.rows()); }
  int n_tx() const noexcept { return static_cast<int>(s_.cols()); }

  // The n x (n * n_tx) block [diag(x_1) ... diag(x_ntx)].
  CMatrix as_block() const;

  void validate() const;  // unit modulus within 1e-12

 private:
  CMatrix s_;  // (k, u)
};

// Stacked received training block, rx antenna 0 first.
struct ReceivedSignal {
  CVector samples;
};

// ---- model matrix builders -------------------------------------------------
//
// One received antenna sees  D * F1 * G * X * (I kron F2) * h_v + noise:
//   F1  warped inverse DFT, the sampling-clock error stretches its phase grid
//   F2  DFT columns restricted to the channel tap delays
//   D   per-sample CFO phase ramp
//   G   per-subcarrier linear phase from the whole-sample timing error
//   X   training symbol diagonals, side by side

// Warped inverse DFT: entry (time l_t, subcarrier k) =
// exp(j 2 pi k l_t (1+sfo) / n) / n.
CMatrix sfo_idft(const SystemConfig& cfg, double sfo);

// DFT columns for tap delays first_delay .. first_delay + n_taps - 1:
// entry (k, l) = exp(-j 2 pi k (first_delay + l) / n).
CMatrix delay_dft(const SystemConfig& cfg, int n_taps, int first_delay = 0);

// diag exp(j 2 pi cfo (1+sfo) l_t / n).
CMatrix cfo_rotation(const SystemConfig& cfg, double cfo, double sfo);

// diag exp(-j 2 pi k ste / n); requires |ste| <= ste_max.
CMatrix ste_rotation(const SystemConfig& cfg, int ste);

// X * (I kron F2): the n x (n_tx * cir_len) training/delay block.
CMatrix training_delay_block(const SystemConfig& cfg, const TrainingMatrix& x);

// Full observation matrix A = I_{n_rx} kron (D F1 G X (I kron F2)),
// (n * n_rx) x (n_rx * n_tx * cir_len).
CMatrix observation_matrix(const SystemConfig& cfg, const TrainingMatrix& x,
                           const Impairments& imp);

// Per-antenna core with the CFO ramp stripped and the timing error absorbed
// into a padded delay span: F1 X (I kron F2pad), n x (n_tx * padded_len).
// `pad_offset` recenters the padded delay window to [-pad_offset,
// padded_len - 1 - pad_offset] so negative timing errors stay inside it.
CMatrix cfo_free_core(const SystemConfig& cfg, const TrainingMatrix& x,
                      double sfo, int pad_offset = 0);

// Timing-free observation matrix A1 = I_{n_rx} kron (D * core).
CMatrix ste_free_observation(const SystemConfig& cfg, const TrainingMatrix& x,
                             double cfo, double sfo, int pad_offset = 0);

// Zero-padded stacked channel h_theta with the timing error folded in:
// each per-link CIR is placed at offset ste + pad_offset inside the padded
// span, so that observation_matrix(imp) * h == ste_free_observation * h_theta.
CVector pad_stacked_channel(const SystemConfig& cfg, const ChannelState& ch,
                            int ste, int pad_offset = 0);

// ---- generators --------------------------------------------------------------

// Noiseless mean plus circularly-symmetric white noise of variance
// cfg.noise_var per complex sample. Deterministic in `seed`.
ReceivedSignal synthesize(const SystemConfig& cfg, const TrainingMatrix& x,
                          const Impairments& imp, const ChannelState& ch,
                          std::uint64_t seed);

// Independent Rayleigh taps, tap l with variance profile.tap_powers[l].
ChannelState generate_channel(const SystemConfig& cfg,
                              const ChannelProfile& profile, std::uint64_t seed);

// Unit-amplitude QPSK training symbols.
TrainingMatrix generate_training(const SystemConfig& cfg, std::uint64_t seed);

}  // namespace mimosync
