// SPDX-License-Identifier: Apache-2.0
#include "racoop/surrogate.hpp"

#include <stdexcept>

namespace racoop {

namespace {

constexpr double kRidgeEig = 1e-8;

CMat regularized(const CMat& x) {
  if (min_eig_hermitian(x) < kRidgeEig)
    return x + kRidgeEig * CMat::Identity(x.rows(), x.cols());
  return x;
}

PhiAnchor make_phi_anchor(const CMat& raw, double weight) {
  PhiAnchor out;
  const CMat reg = regularized(raw);
  const PsdPinv p = pinv_psd(reg, 1e-10);
  out.inv = p.pinv;
  out.logdet2 = p.logdet2Nonzero;
  out.weight = weight;
  return out;
}

double phi_with(const PhiAnchor& t, const CMat& a) {
  const int n = static_cast<int>(a.rows());
  // tr(B^-1 A) - rank; anchor is full rank after regularization.
  const double traceTerm = std::real((t.inv * a).trace()) - n;
  return t.logdet2 + traceTerm * kLog2e;
}

/// Cov([x2; y]) for the RRH-2-only reduced split.
CMat reduced_pair_rrh2(const PrecoderSolution& sol, const ChannelSet& channels,
                       const SystemConfig& config, int ue, int delay) {
  const CMat& h1 = channels.of(ue, 0);
  const CMat& h2 = channels.of(ue, 1);
  const CMat rx = received_covariance(sol, channels, config, ue, delay);
  const CMat c = h1 * sol.crossCorr[ue][delay] + h2 * sol.rrh2Cov[ue];
  const int n2 = config.antennasRrh2;
  const int ny = static_cast<int>(rx.rows());
  CMat out = CMat::Zero(n2 + ny, n2 + ny);
  out.topLeftCorner(n2, n2) = sol.rrh2Cov[ue];
  out.topRightCorner(n2, ny) = c.adjoint();
  out.bottomLeftCorner(ny, n2) = c;
  out.bottomRightCorner(ny, ny) = rx;
  return hermitize(out);
}

/// Cov([v_d; y]) — the same block as PairContext::pairCov.
CMat pair_cov(const PrecoderSolution& sol, const ChannelSet& channels,
              const SystemConfig& config, int ue, int delay) {
  return build_pair_context(sol, channels, config, ue, delay).pairCov;
}

}  // namespace

int Anchor::delayIndex(int delay) const {
  for (std::size_t i = 0; i < designDelays.size(); ++i) {
    if (designDelays[i] == delay) return static_cast<int>(i);
  }
  throw std::invalid_argument("delay not in the anchor's design set");
}

double phi(const CMat& a, const CMat& anchor) {
  PhiAnchor t = make_phi_anchor(anchor, 1.0);
  return phi_with(t, a);
}

Anchor build_anchor(const PrecoderSolution& sol, const ChannelSet& channels,
                    const SystemConfig& config, RateForm form,
                    std::vector<int> designDelays) {
  const FeasibilityReport feas = check_feasibility(sol, config, 1e-6);
  if (!feas.feasible)
    throw std::invalid_argument("anchor point is infeasible: " +
                                feas.violations.front().constraint);
  Anchor anchor;
  anchor.point = sol;
  anchor.config = config;
  anchor.form = form;
  if (designDelays.empty()) {
    for (int d = 0; d < config.delayCount(); ++d) designDelays.push_back(d);
  }
  anchor.designDelays = std::move(designDelays);

  anchor.vTerm.resize(config.numUes);
  anchor.aTerm.resize(config.numUes);
  anchor.bTerm.resize(config.numUes);
  for (int k = 0; k < config.numUes; ++k) {
    if (form == RateForm::Full) {
      anchor.vTerm[k] =
          make_phi_anchor(sol.rrh1Cov[k], double(config.worstCaseDelay));
    }
    for (int d : anchor.designDelays) {
      switch (form) {
        case RateForm::Full: {
          const PairContext ctx = build_pair_context(sol, channels, config, k, d);
          anchor.aTerm[k].push_back(make_phi_anchor(ctx.pairCov, 1.0));
          anchor.bTerm[k].push_back(make_phi_anchor(ctx.tripleCov, 1.0));
          break;
        }
        case RateForm::Rrh1Only:
          anchor.aTerm[k].push_back(
              make_phi_anchor(pair_cov(sol, channels, config, k, d), 1.0));
          break;
        case RateForm::Rrh2Only:
          anchor.bTerm[k].push_back(make_phi_anchor(
              reduced_pair_rrh2(sol, channels, config, k, d), 1.0));
          break;
      }
    }
  }
  return anchor;
}

double surrogate_rate(const PrecoderSolution& sol, const Anchor& anchor,
                      const ChannelSet& channels, int ue, int delay) {
  const SystemConfig& config = anchor.config;
  const int di = anchor.delayIndex(delay);
  switch (anchor.form) {
    case RateForm::Full: {
      const PairContext ctx = build_pair_context(sol, channels, config, ue, delay);
      const CMat yv = ctx.sel1 * ctx.tripleCov * ctx.sel1.transpose();
      const CMat xv = ctx.sel2 * ctx.tripleCov * ctx.sel2.transpose();
      double val = logdet2_psd(ctx.rxCov) + logdet2_psd(yv) + logdet2_psd(xv);
      if (anchor.vTerm[ue].weight != 0.0)
        val -= anchor.vTerm[ue].weight * phi_with(anchor.vTerm[ue], sol.rrh1Cov[ue]);
      val -= phi_with(anchor.aTerm[ue][di], ctx.pairCov);
      val -= phi_with(anchor.bTerm[ue][di], ctx.tripleCov);
      return val;
    }
    case RateForm::Rrh1Only: {
      const CMat rx = received_covariance(sol, channels, config, ue, delay);
      double val = logdet2_psd(rx) + logdet2_psd(sol.rrh1Cov[ue]);
      val -= phi_with(anchor.aTerm[ue][di],
                      pair_cov(sol, channels, config, ue, delay));
      return val;
    }
    case RateForm::Rrh2Only: {
      const CMat rx = received_covariance(sol, channels, config, ue, delay);
      double val = logdet2_psd(rx) + logdet2_psd(sol.rrh2Cov[ue]);
      val -= phi_with(anchor.bTerm[ue][di],
                      reduced_pair_rrh2(sol, channels, config, ue, delay));
      return val;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace racoop
