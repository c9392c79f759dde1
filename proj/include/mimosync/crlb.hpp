// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mimosync/signal_model.hpp"

namespace mimosync {

// Complex building blocks of the Fisher information matrix for the parameter
// vector [cfo, sfo, Re(h), Im(h)]. The real FIM is (2/noise_var) * Re of the
// complex inner products of the mean gradients; `assemble()` performs that
// expansion. Sync-only blocks (with_channel == false) carry just the 2x2
// cfo/sfo part.
struct FisherBlocks {
  Complex g_cfo_cfo{};
  Complex g_cfo_sfo{};  // g_sfo_cfo is its conjugate
  Complex g_sfo_sfo{};
  CVector v_ch_cfo;  // <d mu/d h_re, d mu/d cfo>, length channel_dim
  CVector v_ch_sfo;
  CMatrix w_ch_ch;   // <d mu/d h_re, d mu/d h_re>, channel_dim square
  double noise_var = 0.0;
  bool with_channel = false;

  // Real symmetric FIM: 2x2 (sync-only) or (2 + 2*channel_dim) square.
  RMatrix assemble() const;
};

// Cramer-Rao lower bounds on the estimator error variances. *_woc treats the
// channel as known (sync-only FIM); *_wc accounts for joint estimation of
// the channel. ch_trace is the trace of the channel block of the inverse
// joint FIM (covers real and imaginary parts).
struct CrlbReport {
  double cfo_woc = 0.0;
  double cfo_wc = 0.0;
  double sfo_woc = 0.0;
  double sfo_wc = 0.0;
  double ch_trace = 0.0;
};

// diag[0, 1, ..., n-1]: per-sample time index weights.
CMatrix sample_index_diag(const SystemConfig& cfg);

// Elementwise sample-index by subcarrier-index weight matrix, built literally
// as (ones kron idx_row) hadamard (ones_row kron idx_col) with a documented
// reduction check against the plain outer product n*k.
CMatrix index_pair_weights(const SystemConfig& cfg);

// Noiseless mean of the received block and its partial derivatives in the
// normalized CFO and the relative SFO.
CVector mean_vector(const SystemConfig& cfg, const TrainingMatrix& x,
                    const Impairments& imp, const ChannelState& ch);
CVector mean_grad_cfo(const SystemConfig& cfg, const TrainingMatrix& x,
                      const Impairments& imp, const ChannelState& ch);
CVector mean_grad_sfo(const SystemConfig& cfg, const TrainingMatrix& x,
                      const Impairments& imp, const ChannelState& ch);

// Sync-only FIM blocks (channel known), entries from the closed-form
// per-antenna kernels rather than explicit gradient inner products.
FisherBlocks fisher_sync(const SystemConfig& cfg, const TrainingMatrix& x,
                         const Impairments& imp, const ChannelState& ch,
                         double noise_var);

// Joint FIM blocks over [cfo, sfo, Re(h), Im(h)].
FisherBlocks fisher_joint(const SystemConfig& cfg, const TrainingMatrix& x,
                          const Impairments& imp, const ChannelState& ch,
                          double noise_var);

// Bounds from joint blocks: the sync-only bounds come from the embedded 2x2,
// the joint ones from the full inverse (positive-definite factorization;
// SingularFim if it fails).
CrlbReport crlb_report(const FisherBlocks& blocks);

// Bounds averaged over `n_realizations` independent channel draws, one
// report per entry of noise_vars. All bounds scale linearly in the noise
// variance, so draws are shared across the sweep.
std::vector<CrlbReport> crlb_averaged(const SystemConfig& cfg,
                                      const TrainingMatrix& x,
                                      const Impairments& imp,
                                      const std::vector<double>& noise_vars,
                                      int n_realizations,
                                      const ChannelProfile& profile,
                                      std::uint64_t seed);

}  // namespace mimosync
