// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "racoop/rates.hpp"

namespace racoop {

/// Which difference-of-convex split a scheme uses. Full keeps both RRH
/// signals; the reduced forms drop the structurally-zero block (one-RRH
/// baselines, zero power budgets) where the full split is singular.
enum class RateForm { Full, Rrh1Only, Rrh2Only };

/// Tangent data for one log-det term: regularized anchor inverse and its
/// log2 determinant. weight multiplies the whole tangent.
struct PhiAnchor {
  CMat inv;
  double logdet2 = 0.0;
  double weight = 1.0;
};

/// Linearization point of one CCCP iteration: the anchor solution plus the
/// per-(UE, delay) tangent data for every convex log-det the surrogate
/// replaces. Anchors near the PSD boundary are ridge-regularized before
/// inversion (1e-8 I below min eigenvalue 1e-8).
struct Anchor {
  PrecoderSolution point;
  SystemConfig config;
  RateForm form = RateForm::Full;
  std::vector<int> designDelays;
  std::vector<PhiAnchor> vTerm;                 // per UE, weight D (Full only)
  std::vector<std::vector<PhiAnchor>> aTerm;    // [ue][delayIdx]
  std::vector<std::vector<PhiAnchor>> bTerm;    // [ue][delayIdx]

  int delayIndex(int delay) const;
};

/// First-order expansion of log2 det at `anchor`: log2|B| + tr(B^-1 (A-B))/ln 2.
/// Upper-bounds log2|A| for any Hermitian PSD A; equality at A = B.
double phi(const CMat& a, const CMat& anchor);

/// Precomputes the tangent data at a feasible solution. Throws
/// std::invalid_argument when the point is infeasible beyond 1e-6.
Anchor build_anchor(const PrecoderSolution& sol, const ChannelSet& channels,
                    const SystemConfig& config, RateForm form = RateForm::Full,
                    std::vector<int> designDelays = {});

/// The concave minorant of rate_f around the anchor. Affine in the
/// solution's entries except for concave log-dets, hence concave; tangent
/// to rate_f at the anchor point.
double surrogate_rate(const PrecoderSolution& sol, const Anchor& anchor,
                      const ChannelSet& channels, int ue, int delay);

}  // namespace racoop
