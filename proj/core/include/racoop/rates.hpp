// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "racoop/model.hpp"

namespace racoop {

/// All matrices entering the rate of one (UE, delay) pair. Block orders:
/// pairCov stacks (v_d, y); tripleCov stacks (x2, y, vbar). The selectors
/// are real 0/1 matrices: sel1 keeps (y, vbar) rows of tripleCov, sel2
/// keeps (x2, vbar), slotSel picks delay slot d out of vbar.
struct PairContext {
  int ue = 0;
  int delay = 0;
  CMat signalCov;    // received signal covariance, noise excluded
  CMat rxCov;        // signalCov + I
  CMat pairCov;      // Cov([v_d; y])
  CMat tripleCov;    // Cov([x2; y; vbar])
  CMat rxX2Cross;    // E[y x2^H]
  CMat vbarRxCross;  // E[vbar y^H]
  RMat sel1;
  RMat sel2;
  RMat slotSel;
};

PairContext build_pair_context(const PrecoderSolution& sol,
                               const ChannelSet& channels,
                               const SystemConfig& config, int ue, int delay);

/// Full covariance of the signal received by `ue` when the offset is
/// `delay`, unit-variance noise included. Hermitian, eigenvalues >= 1.
CMat received_covariance(const PrecoderSolution& sol, const ChannelSet& channels,
                         const SystemConfig& config, int ue, int delay);

/// I(v_{k,d}; y_{k,d}) in bits, evaluated as a difference of conditional
/// log-dets with thresholded pseudo-inverses so boundary solutions (rank
/// deficient covariances, full cross-correlation) stay finite and exact.
double mi_direct(const PrecoderSolution& sol, const ChannelSet& channels,
                 const SystemConfig& config, int ue, int delay);

/// I(x_{2,k}; y_{k,d} | vbar_k) in bits, same conditional-covariance scheme.
double mi_conditional(const PrecoderSolution& sol, const ChannelSet& channels,
                      const SystemConfig& config, int ue, int delay);

/// Rate of the (ue, delay) pair: mi_direct + mi_conditional.
double rate_f(const PrecoderSolution& sol, const ChannelSet& channels,
              const SystemConfig& config, int ue, int delay);

/// Rates over an explicit delay subset (design/evaluation sets differ for
/// some schemes). perUe minimizes over the listed delays only.
RateReport rate_report(const PrecoderSolution& sol, const ChannelSet& channels,
                       const SystemConfig& config, const std::vector<int>& delays);

/// Worst case over the whole uncertainty set {0..D}.
RateReport worst_case_rates(const PrecoderSolution& sol, const ChannelSet& channels,
                            const SystemConfig& config);

/// I(X; Y | Z) in bits between jointly Gaussian coordinate blocks of a
/// complex covariance matrix, from block-entropy sums alone (pseudo-
/// determinants for rank-deficient blocks). Independent cross-check for
/// the closed-form rate path. Throws std::invalid_argument on overlapping
/// or out-of-range partitions.
double mi_gaussian_oracle(const CMat& jointCov, const std::vector<int>& xIdx,
                          const std::vector<int>& yIdx,
                          const std::vector<int>& zIdx = {});

/// Joint covariance of (vbar_k, x_{2,k}, y_{k,d}) assembled from first
/// principles: the per-UE transmit covariance propagated through the
/// channel plus independent interference and noise. Deliberately avoids
/// the closed-form blocks used by the rate path; feeds the oracle.
CMat oracle_joint_covariance(const PrecoderSolution& sol, const ChannelSet& channels,
                             const SystemConfig& config, int ue, int delay);

}  // namespace racoop
