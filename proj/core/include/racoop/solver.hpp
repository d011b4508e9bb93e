// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "racoop/detmax.hpp"
#include "racoop/surrogate.hpp"

namespace racoop {

/// Which variable blocks a scheme freezes at zero. An empty
/// activeCrossDelays means all delays carry free cross-correlations
/// (unless crossZero or a silent flag already removes them).
struct SchemeMask {
  bool rrh1Silent = false;  // V_k and Omega frozen
  bool rrh2Silent = false;  // Sigma_x2k and Omega frozen
  bool crossZero = false;   // Omega frozen
  std::vector<int> activeCrossDelays;

  bool crossFrozen() const { return crossZero || rrh1Silent || rrh2Silent; }
};

struct SolveTolerances {
  double gapAbs = 1e-9;   // absolute barrier gap target (bits)
  double feasTol = 1e-7;
  int maxInner = 4000;    // total Newton step budget
};

/// One convex inner problem: maximize R_min over the unfrozen variables
/// subject to surrogate-rate, per-RRH trace and per-UE PSD constraints,
/// all linearized/assembled around the anchor.
struct SubproblemSpec {
  const Anchor* anchor = nullptr;
  const ChannelSet* channels = nullptr;
  const SystemConfig* config = nullptr;
  SchemeMask mask;
  SolveTolerances tol;
};

enum class SubStatus { Optimal, MaxIter, NumericalFailure };

struct SubproblemResult {
  PrecoderSolution solution;
  double rMin = 0.0;           // min over (k,d) of the surrogate at `solution`
  double gapCertificate = 0.0;
  int innerIterations = 0;
  SubStatus status = SubStatus::Optimal;
};

SubproblemResult solve_subproblem(const SubproblemSpec& spec);

}  // namespace racoop
