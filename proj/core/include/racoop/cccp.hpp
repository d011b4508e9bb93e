// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>

#include "racoop/solver.hpp"

namespace racoop {

enum class SchemeKind {
  Robust,          // free cross-correlation on every delay slot
  TxSelection,     // one RRH active; better of the two branches
  NonCooperative,  // independent RRH signals (cross terms zero)
  NonRobustCoop,   // designed for zero offset, evaluated on the whole set
  SyncGenie        // delay known exactly
};

enum class TxBranch { Auto, Rrh1, Rrh2 };

struct Scheme {
  SchemeKind kind = SchemeKind::Robust;
  int knownDelay = 0;            // SyncGenie only
  TxBranch branch = TxBranch::Auto;  // TxSelection only

  static Scheme robust() { return {SchemeKind::Robust}; }
  static Scheme txSelection(TxBranch b = TxBranch::Auto) {
    return {SchemeKind::TxSelection, 0, b};
  }
  static Scheme nonCooperative() { return {SchemeKind::NonCooperative}; }
  static Scheme nonRobustCoop() { return {SchemeKind::NonRobustCoop}; }
  static Scheme syncGenie(int knownDelay) {
    return {SchemeKind::SyncGenie, knownDelay};
  }
  std::string name() const;
};

struct CccpOptions {
  int maxOuter = 50;
  double tolOuter = 1e-5;  // absolute objective improvement, bits
  SolveTolerances inner;
};

/// One optimization run. objective[0] is the initial point's true min rate
/// over the design pairs; one entry is appended per subproblem solve.
/// The sequence is non-decreasing (a reverting safeguard enforces the MM
/// guarantee against inner-solver slack).
struct CccpTrace {
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
  bool solverFailed = false;
  PrecoderSolution finalSolution;
  RateReport finalReport;
};

/// Arbitrary feasible starting point: scaled-identity covariance blocks
/// meeting the trace budgets with equality, zero cross-correlation, and the
/// scheme's frozen blocks zeroed.
PrecoderSolution initialize(const SystemConfig& config, const ChannelSet& channels,
                            const Scheme& scheme);

CccpTrace run_cccp(const SystemConfig& config, const ChannelSet& channels,
                   const Scheme& scheme, const CccpOptions& options = {},
                   const std::optional<PrecoderSolution>& initial = std::nullopt);

struct SuiteOptions {
  int genieDelay = 0;
  bool warmStart = true;  // false reproduces identity initialization everywhere
  CccpOptions cccp;
  std::vector<SchemeKind> wanted;  // empty = all five
};

/// Runs the scheme family on shared channels. With warm starts enabled the
/// runs are chained (txSelection -> nonCooperative -> robust -> genie;
/// nonRobustCoop from nonCooperative) so the baseline ordering holds per
/// trial, not just in expectation. Reports are evaluated at the config's
/// phase offset over each scheme's evaluation delay set.
std::map<SchemeKind, CccpTrace> run_scheme_suite(const SystemConfig& config,
                                                 const ChannelSet& channels,
                                                 const SuiteOptions& options = {});

}  // namespace racoop
