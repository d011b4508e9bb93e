// SPDX-License-Identifier: Apache-2.0
#include "racoop/rates.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace racoop {

namespace {

constexpr double kPinvTol = 1e-10;

void check_pair(const SystemConfig& config, int ue, int delay) {
  if (ue < 0 || ue >= config.numUes) throw std::invalid_argument("UE index out of range");
  if (delay < 0 || delay > config.worstCaseDelay)
    throw std::invalid_argument("delay outside the uncertainty set");
}

}  // namespace

CMat received_covariance(const PrecoderSolution& sol, const ChannelSet& channels,
                         const SystemConfig& config, int ue, int delay) {
  check_pair(config, ue, delay);
  const CMat& h1 = channels.of(ue, 0);
  const CMat& h2 = channels.of(ue, 1);
  const int ny = static_cast<int>(h1.rows());
  CMat cov = CMat::Identity(ny, ny);
  for (int l = 0; l < config.numUes; ++l) {
    cov.noalias() += h1 * sol.rrh1Cov[l] * h1.adjoint();
    cov.noalias() += h2 * sol.rrh2Cov[l] * h2.adjoint();
    const CMat cross = h1 * sol.crossCorr[l][delay] * h2.adjoint();
    cov += cross + cross.adjoint();
  }
  return hermitize(cov);
}

PairContext build_pair_context(const PrecoderSolution& sol,
                               const ChannelSet& channels,
                               const SystemConfig& config, int ue, int delay) {
  check_pair(config, ue, delay);
  const CMat& h1 = channels.of(ue, 0);
  const CMat& h2 = channels.of(ue, 1);
  const int n1 = config.antennasRrh1;
  const int n2 = config.antennasRrh2;
  const int ny = config.antennasUe[ue];
  const int slots = config.delayCount();

  PairContext ctx;
  ctx.ue = ue;
  ctx.delay = delay;
  ctx.rxCov = received_covariance(sol, channels, config, ue, delay);
  ctx.signalCov = ctx.rxCov - CMat::Identity(ny, ny);

  const CMat& v = sol.rrh1Cov[ue];
  const CMat& sx2 = sol.rrh2Cov[ue];
  const auto& cross = sol.crossCorr[ue];

  // Cov([v_d; y]): E[v y^H] = V H1^H + Omega_d H2^H.
  const CMat vy = v * h1.adjoint() + cross[delay] * h2.adjoint();
  ctx.pairCov = CMat::Zero(n1 + ny, n1 + ny);
  ctx.pairCov.topLeftCorner(n1, n1) = v;
  ctx.pairCov.topRightCorner(n1, ny) = vy;
  ctx.pairCov.bottomLeftCorner(ny, n1) = vy.adjoint();
  ctx.pairCov.bottomRightCorner(ny, ny) = ctx.rxCov;
  ctx.pairCov = hermitize(ctx.pairCov);

  // E[y x2^H] and E[vbar y^H].
  ctx.rxX2Cross = h1 * cross[delay] + h2 * sx2;
  ctx.vbarRxCross = CMat::Zero(slots * n1, ny);
  for (int s = 0; s < slots; ++s) {
    ctx.vbarRxCross.block(s * n1, 0, n1, ny) = cross[s] * h2.adjoint();
  }
  ctx.vbarRxCross.block(delay * n1, 0, n1, ny) += v * h1.adjoint();

  // Cov([x2; y; vbar]).
  const int dim = n2 + ny + slots * n1;
  ctx.tripleCov = CMat::Zero(dim, dim);
  ctx.tripleCov.block(0, 0, n2, n2) = sx2;
  ctx.tripleCov.block(0, n2, n2, ny) = ctx.rxX2Cross.adjoint();
  ctx.tripleCov.block(n2, 0, ny, n2) = ctx.rxX2Cross;
  ctx.tripleCov.block(n2, n2, ny, ny) = ctx.rxCov;
  for (int s = 0; s < slots; ++s) {
    const int row = n2 + ny + s * n1;
    ctx.tripleCov.block(row, 0, n1, n2) = cross[s];
    ctx.tripleCov.block(0, row, n2, n1) = cross[s].adjoint();
    ctx.tripleCov.block(row, n2, n1, ny) = ctx.vbarRxCross.block(s * n1, 0, n1, ny);
    ctx.tripleCov.block(n2, row, ny, n1) =
        ctx.vbarRxCross.block(s * n1, 0, n1, ny).adjoint();
    ctx.tripleCov.block(row, row, n1, n1) = v;
  }
  ctx.tripleCov = hermitize(ctx.tripleCov);

  ctx.sel1 = RMat::Zero(ny + slots * n1, dim);
  ctx.sel1.rightCols(ny + slots * n1).setIdentity();
  ctx.sel2 = RMat::Zero(n2 + slots * n1, dim);
  ctx.sel2.topLeftCorner(n2, n2).setIdentity();
  ctx.sel2.bottomRightCorner(slots * n1, slots * n1).setIdentity();
  ctx.slotSel = RMat::Zero(n1, slots * n1);
  ctx.slotSel.block(0, delay * n1, n1, n1).setIdentity();
  return ctx;
}

double mi_direct(const PrecoderSolution& sol, const ChannelSet& channels,
                 const SystemConfig& config, int ue, int delay) {
  check_pair(config, ue, delay);
  const CMat& h1 = channels.of(ue, 0);
  const CMat& h2 = channels.of(ue, 1);
  const CMat rx = received_covariance(sol, channels, config, ue, delay);
  // Cov(y | v_d) = rx - S V^+ S^H with S = E[y v^H].
  const CMat s = h1 * sol.rrh1Cov[ue] + h2 * sol.crossCorr[ue][delay].adjoint();
  const PsdPinv vp = pinv_psd(sol.rrh1Cov[ue], kPinvTol);
  const CMat cond = hermitize(rx - s * vp.pinv * s.adjoint());
  return logdet2_psd(rx) - logdet2_psd(cond);
}

double mi_conditional(const PrecoderSolution& sol, const ChannelSet& channels,
                      const SystemConfig& config, int ue, int delay) {
  const PairContext ctx = build_pair_context(sol, channels, config, ue, delay);
  const int n1 = config.antennasRrh1;
  const int n2 = config.antennasRrh2;
  const int slots = config.delayCount();

  // Cov(y | vbar): vbar has block-diagonal covariance with equal blocks.
  const PsdPinv vp = pinv_psd(sol.rrh1Cov[ue], kPinvTol);
  CMat vbarPinv = CMat::Zero(slots * n1, slots * n1);
  for (int s = 0; s < slots; ++s) vbarPinv.block(s * n1, s * n1, n1, n1) = vp.pinv;
  const CMat condV = hermitize(ctx.rxCov - ctx.vbarRxCross.adjoint() * vbarPinv *
                                               ctx.vbarRxCross);

  // Cov(y | vbar, x2): condition on the stacked (x2, vbar) vector.
  CMat side = CMat::Zero(n2 + slots * n1, n2 + slots * n1);
  side.topLeftCorner(n2, n2) = sol.rrh2Cov[ue];
  for (int s = 0; s < slots; ++s) {
    side.block(n2 + s * n1, n2 + s * n1, n1, n1) = sol.rrh1Cov[ue];
    side.block(n2 + s * n1, 0, n1, n2) = sol.crossCorr[ue][s];
    side.block(0, n2 + s * n1, n2, n1) = sol.crossCorr[ue][s].adjoint();
  }
  CMat gain(ctx.rxCov.rows(), n2 + slots * n1);  // E[y (x2, vbar)^H]
  gain.leftCols(n2) = ctx.rxX2Cross;
  gain.rightCols(slots * n1) = ctx.vbarRxCross.adjoint();
  const PsdPinv sp = pinv_psd(hermitize(side), kPinvTol);
  const CMat condVX = hermitize(ctx.rxCov - gain * sp.pinv * gain.adjoint());

  return logdet2_psd(condV) - logdet2_psd(condVX);
}

double rate_f(const PrecoderSolution& sol, const ChannelSet& channels,
              const SystemConfig& config, int ue, int delay) {
  return mi_direct(sol, channels, config, ue, delay) +
         mi_conditional(sol, channels, config, ue, delay);
}

RateReport rate_report(const PrecoderSolution& sol, const ChannelSet& channels,
                       const SystemConfig& config, const std::vector<int>& delays) {
  RateReport report;
  report.delays = delays;
  report.perPair.resize(config.numUes);
  report.perUe.assign(config.numUes, 0.0);
  double overall = std::numeric_limits<double>::infinity();
  for (int k = 0; k < config.numUes; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    for (int d : delays) {
      const double f = rate_f(sol, channels, config, k, d);
      report.perPair[k].push_back(f);
      lo = std::min(lo, f);
    }
    report.perUe[k] = lo;
    overall = std::min(overall, lo);
  }
  report.minRate = overall;
  return report;
}

RateReport worst_case_rates(const PrecoderSolution& sol, const ChannelSet& channels,
                            const SystemConfig& config) {
  std::vector<int> all(config.delayCount());
  for (int d = 0; d < config.delayCount(); ++d) all[d] = d;
  return rate_report(sol, channels, config, all);
}

double mi_gaussian_oracle(const CMat& jointCov, const std::vector<int>& xIdx,
                          const std::vector<int>& yIdx,
                          const std::vector<int>& zIdx) {
  const int n = static_cast<int>(jointCov.rows());
  std::vector<char> seen(n, 0);
  auto checkIdx = [&](const std::vector<int>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= n) throw std::invalid_argument("partition index out of range");
      if (seen[i]) throw std::invalid_argument("partition blocks overlap");
      seen[i] = 1;
    }
  };
  checkIdx(xIdx);
  checkIdx(yIdx);
  checkIdx(zIdx);
  if (xIdx.empty() || yIdx.empty()) throw std::invalid_argument("empty partition block");

  auto entropy = [&](std::vector<int> idx) {
    if (idx.empty()) return 0.0;
    return pseudo_logdet2(submatrix(jointCov, idx), kPinvTol);
  };
  auto joined = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
  };

  // h(X,Z) + h(Y,Z) - h(Z) - h(X,Y,Z); additive constants cancel.
  return entropy(joined(xIdx, zIdx)) + entropy(joined(yIdx, zIdx)) - entropy(zIdx) -
         entropy(joined(joined(xIdx, yIdx), zIdx));
}

CMat oracle_joint_covariance(const PrecoderSolution& sol, const ChannelSet& channels,
                             const SystemConfig& config, int ue, int delay) {
  check_pair(config, ue, delay);
  const CMat& h1 = channels.of(ue, 0);
  const CMat& h2 = channels.of(ue, 1);
  const int n1 = config.antennasRrh1;
  const int n2 = config.antennasRrh2;
  const int ny = config.antennasUe[ue];
  const int slots = config.delayCount();
  const int m = slots * n1 + n2;

  // y = L [vbar; x2] + w, with w collecting noise and the other UEs'
  // signals; Cov(w) assembled per interfering UE from its own joint
  // covariance pushed through [H1 at slot d, H2].
  CMat mix = CMat::Zero(ny, m);
  mix.block(0, delay * n1, ny, n1) = h1;
  mix.block(0, slots * n1, ny, n2) = h2;

  CMat noise = CMat::Identity(ny, ny);
  for (int l = 0; l < config.numUes; ++l) {
    if (l == ue) continue;
    const CMat jl = assemble_joint_covariance(sol, l);
    noise += mix * jl * mix.adjoint();
  }

  const CMat own = assemble_joint_covariance(sol, ue);
  CMat joint = CMat::Zero(m + ny, m + ny);
  joint.topLeftCorner(m, m) = own;
  joint.topRightCorner(m, ny) = own * mix.adjoint();
  joint.bottomLeftCorner(ny, m) = mix * own;
  joint.bottomRightCorner(ny, ny) = mix * own * mix.adjoint() + noise;
  return hermitize(joint);
}

}  // namespace racoop
