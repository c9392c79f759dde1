// SPDX-License-Identifier: Apache-2.0
#include "mimosync/crlb.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "mimosync/rng.hpp"

namespace mimosync {

CMatrix sample_index_diag(const SystemConfig& cfg) {
  CVector c(cfg.n);
  for (int i = 0; i < cfg.n; ++i) c(i) = Complex(i, 0.0);
  return c.asDiagonal();
}

CMatrix index_pair_weights(const SystemConfig& cfg) {
  const int n = cfg.n;
  const CMatrix c1 = sample_index_diag(cfg);
  CMatrix ones_col = CMatrix::Ones(n, 1);   // diagonal of the identity
  CMatrix idx_col = c1.diagonal();          // [0, 1, ..., n-1]^T
  const CMatrix lhs = kron(ones_col, idx_col.transpose());
  const CMatrix rhs = kron(ones_col.transpose(), idx_col);
  CMatrix w = hadamard(lhs, rhs);
  // Reduction check: the construction above must collapse to the plain outer
  // product of the index vector with itself, entry (lt, k) = lt * k. Guards
  // against silent convention drift in kron/hadamard.
  for (int lt = 0; lt < n; ++lt)
    for (int k = 0; k < n; ++k)
      if (std::abs(w(lt, k) - Complex(double(lt) * k, 0.0)) > 1e-9)
        throw DimensionMismatch("index_pair_weights failed its reduction check");
  return w;
}

namespace {

// Per-antenna kernels shared by the mean gradients and every FIM entry.
// All are independent of the channel draw, so bound averaging builds them
// once. With S = G * X * (I kron F2):
//   m  = F1 * S               (mean, CFO ramp stripped)
//   mc = C1 * F1 * S          (time-weighted mean)
//   me = (C2 o F1) * S        (warp derivative)
// and the SFO gradient kernel is k_sfo * (cfo * mc + me).
struct FisherKernel {
  CMatrix m, mc, msfo;
  double k_cfo = 0.0;  // 2 pi (1 + sfo) / n
  double k_sfo = 0.0;  // 2 pi / n
  int n_rx = 0;
  Eigen::Index block = 0;  // per-antenna channel dim n_tx * cir_len

  FisherKernel(const SystemConfig& cfg, const TrainingMatrix& x,
               const Impairments& imp) {
    cfg.validate();
    const CMatrix s =
        ste_rotation(cfg, imp.ste) * training_delay_block(cfg, x);
    const CMatrix f1 = sfo_idft(cfg, imp.sfo);
    CVector c1(cfg.n);
    for (int i = 0; i < cfg.n; ++i) c1(i) = Complex(i, 0.0);
    const CMatrix e = hadamard(index_pair_weights(cfg), f1);
    m = f1 * s;
    mc = c1.asDiagonal() * m;
    msfo = imp.cfo * mc + e * s;
    k_cfo = 2.0 * M_PI * (1.0 + imp.sfo) / cfg.n;
    k_sfo = 2.0 * M_PI / cfg.n;
    n_rx = cfg.n_rx;
    block = s.cols();
  }

  FisherBlocks blocks(const ChannelState& ch, double noise_var,
                      bool with_channel) const {
    FisherBlocks out;
    out.noise_var = noise_var;
    out.with_channel = with_channel;
    const CMatrix tcc = mc.adjoint() * mc;
    const CMatrix tcs = mc.adjoint() * msfo;
    const CMatrix tss = msfo.adjoint() * msfo;
    if (with_channel) {
      out.v_ch_cfo = CVector::Zero(block * n_rx);
      out.v_ch_sfo = CVector::Zero(block * n_rx);
      out.w_ch_ch = CMatrix::Zero(block * n_rx, block * n_rx);
    }
    const CMatrix mhm = with_channel ? CMatrix(m.adjoint() * m) : CMatrix();
    const CMatrix mhc = with_channel ? CMatrix(m.adjoint() * mc) : CMatrix();
    const CMatrix mhs = with_channel ? CMatrix(m.adjoint() * msfo) : CMatrix();
    const Complex jk_cfo(0.0, k_cfo);
    const Complex jk_sfo(0.0, k_sfo);
    for (int v = 0; v < n_rx; ++v) {
      const CVector hv = ch.stacked().segment(v * block, block);
      out.g_cfo_cfo += k_cfo * k_cfo * (hv.adjoint() * tcc * hv)(0);
      out.g_cfo_sfo += k_cfo * k_sfo * (hv.adjoint() * tcs * hv)(0);
      out.g_sfo_sfo += k_sfo * k_sfo * (hv.adjoint() * tss * hv)(0);
      if (with_channel) {
        out.v_ch_cfo.segment(v * block, block) = jk_cfo * (mhc * hv);
        out.v_ch_sfo.segment(v * block, block) = jk_sfo * (mhs * hv);
        out.w_ch_ch.block(v * block, v * block, block, block) = mhm;
      }
    }
    return out;
  }
};

void check_channel(const SystemConfig& cfg, const ChannelState& ch) {
  if (ch.n_tx() != cfg.n_tx || ch.n_rx() != cfg.n_rx ||
      ch.cir_len() != cfg.cir_len)
    throw DimensionMismatch("channel dimensions do not match config");
}

}  // namespace

CVector mean_vector(const SystemConfig& cfg, const TrainingMatrix& x,
                    const Impairments& imp, const ChannelState& ch) {
  check_channel(cfg, ch);
  return observation_matrix(cfg, x, imp) * ch.stacked();
}

CVector mean_grad_cfo(const SystemConfig& cfg, const TrainingMatrix& x,
                      const Impairments& imp, const ChannelState& ch) {
  check_channel(cfg, ch);
  const FisherKernel kern(cfg, x, imp);
  const CMatrix d = cfo_rotation(cfg, imp.cfo, imp.sfo);
  const CMatrix grad = Complex(0.0, kern.k_cfo) * (d * kern.mc);
  return kron(CMatrix::Identity(cfg.n_rx, cfg.n_rx), grad) * ch.stacked();
}

CVector mean_grad_sfo(const SystemConfig& cfg, const TrainingMatrix& x,
                      const Impairments& imp, const ChannelState& ch) {
  check_channel(cfg, ch);
  const FisherKernel kern(cfg, x, imp);
  const CMatrix d = cfo_rotation(cfg, imp.cfo, imp.sfo);
  const CMatrix grad = Complex(0.0, kern.k_sfo) * (d * kern.msfo);
  return kron(CMatrix::Identity(cfg.n_rx, cfg.n_rx), grad) * ch.stacked();
}

FisherBlocks fisher_sync(const SystemConfig& cfg, const TrainingMatrix& x,
                         const Impairments& imp, const ChannelState& ch,
                         double noise_var) {
  check_channel(cfg, ch);
  if (!(noise_var > 0.0)) throw ConfigError("noise_var must be positive");
  return FisherKernel(cfg, x, imp).blocks(ch, noise_var, false);
}

FisherBlocks fisher_joint(const SystemConfig& cfg, const TrainingMatrix& x,
                          const Impairments& imp, const ChannelState& ch,
                          double noise_var) {
  check_channel(cfg, ch);
  if (!(noise_var > 0.0)) throw ConfigError("noise_var must be positive");
  return FisherKernel(cfg, x, imp).blocks(ch, noise_var, true);
}

RMatrix FisherBlocks::assemble() const {
  const double c = 2.0 / noise_var;
  if (!with_channel) {
    RMatrix fim(2, 2);
    fim(0, 0) = c * g_cfo_cfo.real();
    fim(0, 1) = c * g_cfo_sfo.real();
    fim(1, 0) = fim(0, 1);
    fim(1, 1) = c * g_sfo_sfo.real();
    return fim;
  }
  const Eigen::Index lp = v_ch_cfo.size();
  RMatrix fim = RMatrix::Zero(2 + 2 * lp, 2 + 2 * lp);
  fim(0, 0) = c * g_cfo_cfo.real();
  fim(0, 1) = c * g_cfo_sfo.real();
  fim(1, 0) = fim(0, 1);
  fim(1, 1) = c * g_sfo_sfo.real();
  // Channel cross terms: the Im(h) column picks up the factor j, turning
  // real parts into imaginary ones.
  fim.block(2, 0, lp, 1) = c * v_ch_cfo.real();
  fim.block(2 + lp, 0, lp, 1) = c * v_ch_cfo.imag();
  fim.block(2, 1, lp, 1) = c * v_ch_sfo.real();
  fim.block(2 + lp, 1, lp, 1) = c * v_ch_sfo.imag();
  fim.block(0, 2, 1, lp) = fim.block(2, 0, lp, 1).transpose();
  fim.block(0, 2 + lp, 1, lp) = fim.block(2 + lp, 0, lp, 1).transpose();
  fim.block(1, 2, 1, lp) = fim.block(2, 1, lp, 1).transpose();
  fim.block(1, 2 + lp, 1, lp) = fim.block(2 + lp, 1, lp, 1).transpose();
  fim.block(2, 2, lp, lp) = c * w_ch_ch.real();
  fim.block(2 + lp, 2 + lp, lp, lp) = c * w_ch_ch.real();
  fim.block(2, 2 + lp, lp, lp) = -c * w_ch_ch.imag();
  fim.block(2 + lp, 2, lp, lp) = c * w_ch_ch.imag();
  return fim;
}

CrlbReport crlb_report(const FisherBlocks& blocks) {
  if (!blocks.with_channel)
    throw SingularFim("crlb_report needs joint blocks (channel included)");
  const double c = 2.0 / blocks.noise_var;
  const double gee = c * blocks.g_cfo_cfo.real();
  const double geh = c * blocks.g_cfo_sfo.real();
  const double ghh = c * blocks.g_sfo_sfo.real();
  const double det = gee * ghh - geh * geh;
  if (!(det > 0.0) || !(gee > 0.0) || !(ghh > 0.0))
    throw SingularFim("sync-only FIM is singular");
  CrlbReport rep;
  rep.cfo_woc = ghh / det;
  rep.sfo_woc = gee / det;

  const RMatrix fim = blocks.assemble();
  Eigen::LLT<RMatrix> llt(fim);
  if (llt.info() != Eigen::Success)
    throw SingularFim("joint FIM is not positive definite");
  const RMatrix inv = llt.solve(RMatrix::Identity(fim.rows(), fim.cols()));
  rep.cfo_wc = inv(0, 0);
  rep.sfo_wc = inv(1, 1);
  rep.ch_trace = inv.diagonal().tail(fim.rows() - 2).sum();
  return rep;
}

std::vector<CrlbReport> crlb_averaged(const SystemConfig& cfg,
                                      const TrainingMatrix& x,
                                      const Impairments& imp,
                                      const std::vector<double>& noise_vars,
                                      int n_realizations,
                                      const ChannelProfile& profile,
                                      std::uint64_t seed) {
  if (n_realizations <= 0)
    throw ConfigError("n_realizations must be positive");
  for (double nv : noise_vars)
    if (!(nv > 0.0)) throw ConfigError("noise variances must be positive");
  const FisherKernel kern(cfg, x, imp);
  CrlbReport acc;
  for (int i = 0; i < n_realizations; ++i) {
    const ChannelState ch =
        generate_channel(cfg, profile, Rng::derive(seed, {0xC81Bu, (std::uint64_t)i}));
    // Unit noise variance; every bound scales linearly in it.
    const CrlbReport one = crlb_report(kern.blocks(ch, 1.0, true));
    acc.cfo_woc += one.cfo_woc;
    acc.cfo_wc += one.cfo_wc;
    acc.sfo_woc += one.sfo_woc;
    acc.sfo_wc += one.sfo_wc;
    acc.ch_trace += one.ch_trace;
  }
  std::vector<CrlbReport> out;
  out.reserve(noise_vars.size());
  for (double nv : noise_vars) {
    CrlbReport rep;
    rep.cfo_woc = nv * acc.cfo_woc / n_realizations;
    rep.cfo_wc = nv * acc.cfo_wc / n_realizations;
    rep.sfo_woc = nv * acc.sfo_woc / n_realizations;
    rep.sfo_wc = nv * acc.sfo_wc / n_realizations;
    rep.ch_trace = nv * acc.ch_trace / n_realizations;
    out.push_back(rep);
  }
  return out;
}

}  // namespace mimosync
