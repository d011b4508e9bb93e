// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "racoop/linalg.hpp"

namespace racoop {

/// Static description of one two-RRH downlink instance: array sizes, the
/// delay uncertainty set {0..worstCaseDelay}, per-RRH linear power budgets
/// and the evaluation-time phase offset between the RRHs (radians).
struct SystemConfig {
  int numUes = 1;
  int antennasRrh1 = 1;
  int antennasRrh2 = 1;
  std::vector<int> antennasUe = {1};
  int worstCaseDelay = 0;
  double powerRrh1 = 1.0;
  double powerRrh2 = 1.0;
  double phaseOffsetEval = 0.0;

  int delayCount() const { return worstCaseDelay + 1; }
  /// Throws std::invalid_argument on inconsistent dimensions/powers.
  void validate() const;
};

/// Flat-fading channel matrices, one per (UE, RRH) pair; constant over a
/// coding block. rrh index j is 0-based (j=0 is the delayed RRH).
struct ChannelSet {
  std::vector<std::array<CMat, 2>> h;

  const CMat& of(int ue, int rrh) const { return h[ue][rrh]; }
};

/// i.i.d. CN(0,1) channels (real/imag parts each variance 1/2),
/// deterministic in the seed. Draw order: UE-major, then RRH, then
/// column-major entries, real before imaginary.
ChannelSet sample_channels(const SystemConfig& config, std::uint64_t seed);

/// Copy with the RRH-1 channels rotated by exp(i*theta); RRH-2 untouched.
ChannelSet apply_phase_offset(const ChannelSet& channels, double theta);

/// The transmit-side optimization variables: per UE, the common covariance
/// of the delayed RRH-1 symbols, the RRH-2 signal covariance, and the
/// cross-correlation against each delayed slot.
struct PrecoderSolution {
  std::vector<CMat> rrh1Cov;                // V_k, antennasRrh1^2
  std::vector<CMat> rrh2Cov;                // Sigma_x2k, antennasRrh2^2
  std::vector<std::vector<CMat>> crossCorr; // Omega_{k,d}, n1 x n2 per delay

  static PrecoderSolution zeros(const SystemConfig& config);
  PrecoderSolution scaled(double factor) const;
};

/// Per-UE joint covariance of the stacked (delayed symbols, RRH-2 signal)
/// vector: block-diagonal copies of rrh1Cov on top, crossCorr stacked in
/// the off-diagonal band, rrh2Cov bottom-right. Exactly Hermitian.
CMat assemble_joint_covariance(const PrecoderSolution& sol, int ue);

struct FeasibilityViolation {
  std::string constraint;
  double magnitude = 0.0;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<FeasibilityViolation> violations;
};

/// Power sums within tol of the budgets and every per-UE joint covariance
/// PSD within tol. Always returns a verdict; violations carry magnitudes.
FeasibilityReport check_feasibility(const PrecoderSolution& sol,
                                    const SystemConfig& config,
                                    double tol = 1e-9);

/// Achievable-rate summary. perPair is indexed [ue][delay slot in
/// `delays`]; perUe is the row minimum and minRate the global minimum.
struct RateReport {
  std::vector<int> delays;
  std::vector<std::vector<double>> perPair;
  std::vector<double> perUe;
  double minRate = 0.0;
};

}  // namespace racoop
