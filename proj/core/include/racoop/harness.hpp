// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "racoop/cccp.hpp"

namespace racoop {

enum class SweepVariable { SnrDb, NumUes, PhaseOffsetDeg, WorstCaseDelay };
enum class OutputFormat { Csv, Json };

std::string to_string(SweepVariable v);
SweepVariable sweep_variable_from_string(const std::string& s);
Scheme scheme_from_string(const std::string& s);

/// One Monte Carlo campaign: a base instance, a variable to sweep, the
/// scheme list, and seeding. Channels are sampled once per (sweep point,
/// trial) and shared across schemes.
struct ExperimentPlan {
  SystemConfig baseConfig;
  SweepVariable sweepVariable = SweepVariable::SnrDb;
  std::vector<double> sweepValues;
  std::vector<Scheme> schemes;
  int trials = 100;
  std::uint64_t masterSeed = 1;
  std::string outputPath;
  OutputFormat format = OutputFormat::Csv;
  bool fig3AntennaRule = false;  // antennasRrh = numUes/2 when sweeping UEs
  bool dumpTrials = false;
  bool warmStart = true;
  int threads = 0;  // 0 = hardware concurrency
  CccpOptions cccp;

  void validate() const;  // throws std::invalid_argument
};

struct ResultRow {
  std::string scheme;
  std::string sweepVariable;
  double sweepValue = 0.0;
  int trialsUsed = 0;
  double avgMinRate = 0.0;
  double stdErr = 0.0;
  double avgIterations = 0.0;
  int failures = 0;
};

struct TrialRecord {
  std::string scheme;
  std::string sweepVariable;
  double sweepValue = 0.0;
  int trial = 0;
  double minRate = 0.0;
  int iterations = 0;
  bool failed = false;
};

/// hash(masterSeed, sweep index, trial index) — the only seed derivation
/// the sweep uses, so outputs are a pure function of the plan.
std::uint64_t trial_seed(std::uint64_t masterSeed, int sweepIdx, int trialIdx);

/// The instance obtained by applying one sweep value to the base config.
SystemConfig config_for(const ExperimentPlan& plan, double sweepValue);

std::vector<ResultRow> run_sweep(const ExperimentPlan& plan,
                                 std::vector<TrialRecord>* trialDump = nullptr);

/// CSV columns: scheme,sweep_variable,sweep_value,trials,avg_min_rate_bits,
/// std_err,avg_iterations,failures (floats at 9 significant digits). JSON
/// mirrors the schema. Throws on empty rows before creating the file.
void emit_results(const std::vector<ResultRow>& rows, OutputFormat format,
                  const std::string& path);

void emit_trial_dump(const std::vector<TrialRecord>& records, const std::string& path);

/// Preset campaign: two single-antenna UEs, D = 1, SNR sweep, all schemes.
ExperimentPlan fig2_preset();
/// Preset campaign: UE-count sweep with antennasRrh = numUes/2 at 10 dB.
ExperimentPlan fig3_preset();

/// Flat key=value plan file ('#' comments, lists comma-separated); keys
/// mirror the plan fields. Throws std::invalid_argument on unknown keys or
/// malformed values.
ExperimentPlan parse_plan_file(const std::string& path);
ExperimentPlan parse_plan_text(const std::string& text);

}  // namespace racoop
