// SPDX-License-Identifier: Apache-2.0
//
// racoop: robust asynchronous cooperative precoding experiments.
// Subcommands: sweep (Monte Carlo campaigns), single (one instance,
// full report), selftest (fast invariant checks).

#include <cmath>
#include <cstdio>
#include <random>

#include <CLI11.hpp>

#include "racoop/harness.hpp"
#include "racoop/rates.hpp"
#include "racoop/surrogate.hpp"

using namespace racoop;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string out_with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

int run_sweep_command(ExperimentPlan plan, const std::vector<double>& thetaList) {
  std::vector<std::pair<std::string, ExperimentPlan>> campaigns;
  if (thetaList.size() > 1) {
    for (double th : thetaList) {
      ExperimentPlan p = plan;
      p.baseConfig.phaseOffsetEval = th * kPi / 180.0;
      char tag[32];
      std::snprintf(tag, sizeof(tag), "_theta%g", th);
      p.outputPath = out_with_suffix(plan.outputPath, tag);
      campaigns.emplace_back(tag + 1, p);
    }
  } else {
    if (thetaList.size() == 1)
      plan.baseConfig.phaseOffsetEval = thetaList[0] * kPi / 180.0;
    campaigns.emplace_back("", plan);
  }

  long totalRuns = 0, totalFailures = 0;
  for (auto& [tag, p] : campaigns) {
    p.validate();
    std::vector<TrialRecord> dump;
    const auto rows = run_sweep(p, p.dumpTrials ? &dump : nullptr);
    emit_results(rows, p.format, p.outputPath);
    if (p.dumpTrials) emit_trial_dump(dump, out_with_suffix(p.outputPath, "_trials"));
    for (const ResultRow& r : rows) {
      totalRuns += r.trialsUsed + r.failures;
      totalFailures += r.failures;
      std::printf("%-16s %s=%-8g avg=%.6f stderr=%.6f iters=%.1f fail=%d\n",
                  r.scheme.c_str(), r.sweepVariable.c_str(), r.sweepValue,
                  r.avgMinRate, r.stdErr, r.avgIterations, r.failures);
    }
    std::printf("wrote %s\n", p.outputPath.c_str());
  }
  if (totalRuns > 0 && totalFailures * 10 > totalRuns) {
    std::fprintf(stderr, "solver failures exceeded 10%% of trials (%ld/%ld)\n",
                 totalFailures, totalRuns);
    return 2;
  }
  return 0;
}

int run_single_command(const SystemConfig& cfg, const std::string& schemeName,
                       std::uint64_t seed, int genieDelay, const CccpOptions& cccp,
                       bool warmStart) {
  cfg.validate();
  const ChannelSet channels = sample_channels(cfg, seed);
  const Scheme scheme = scheme_from_string(schemeName);

  SuiteOptions opts;
  opts.cccp = cccp;
  opts.warmStart = warmStart;
  opts.genieDelay = genieDelay;
  opts.wanted = {scheme.kind};
  const auto suite = run_scheme_suite(cfg, channels, opts);
  const CccpTrace& trace = suite.at(scheme.kind);

  std::printf("scheme:      %s\n", scheme.name().c_str());
  std::printf("iterations:  %d (%s)\n", trace.iterations,
              trace.solverFailed ? "solver failure"
              : trace.converged  ? "converged"
                                 : "iteration limit");
  std::printf("objective trace (bits/channel use):\n");
  for (std::size_t t = 0; t < trace.objective.size(); ++t)
    std::printf("  t=%-3zu %.9f\n", t, trace.objective[t]);
  const RateReport& rep = trace.finalReport;
  std::printf("per-pair rates f_{k,d}:\n");
  for (std::size_t k = 0; k < rep.perPair.size(); ++k) {
    std::printf("  UE %zu:", k);
    for (std::size_t di = 0; di < rep.delays.size(); ++di)
      std::printf("  d=%d: %.6f", rep.delays[di], rep.perPair[k][di]);
    std::printf("\n");
  }
  std::printf("per-UE worst case:");
  for (double r : rep.perUe) std::printf(" %.6f", r);
  std::printf("\nmin rate: %.9f\n", rep.minRate);

  const FeasibilityReport feas = check_feasibility(trace.finalSolution, cfg, 1e-7);
  std::printf("final solution feasible at 1e-7: %s\n", feas.feasible ? "yes" : "no");
  return trace.solverFailed ? 2 : 0;
}

struct SelfTest {
  int failures = 0;
  void check(bool ok, const char* what) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what);
    if (!ok) ++failures;
  }
};

PrecoderSolution random_feasible(const SystemConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto cgauss = [&](int r, int c) {
    CMat m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = Cplx(g(rng), g(rng));
    return m;
  };
  PrecoderSolution sol = PrecoderSolution::zeros(cfg);
  for (int k = 0; k < cfg.numUes; ++k) {
    const CMat a = cgauss(cfg.antennasRrh1, cfg.antennasRrh1);
    const CMat b = cgauss(cfg.antennasRrh2, cfg.antennasRrh2);
    sol.rrh1Cov[k] = hermitize(a * a.adjoint()) +
                     1e-3 * CMat::Identity(cfg.antennasRrh1, cfg.antennasRrh1);
    sol.rrh2Cov[k] = hermitize(b * b.adjoint()) +
                     1e-3 * CMat::Identity(cfg.antennasRrh2, cfg.antennasRrh2);
    for (int d = 0; d < cfg.delayCount(); ++d)
      sol.crossCorr[k][d] = 0.2 * cgauss(cfg.antennasRrh1, cfg.antennasRrh2);
    while (min_eig_hermitian(assemble_joint_covariance(sol, k)) < 5e-4) {
      for (int d = 0; d < cfg.delayCount(); ++d) sol.crossCorr[k][d] *= 0.5;
    }
  }
  double tr1 = 0.0, tr2 = 0.0;
  for (int k = 0; k < cfg.numUes; ++k) {
    tr1 += std::real(sol.rrh1Cov[k].trace());
    tr2 += std::real(sol.rrh2Cov[k].trace());
  }
  const double c = 0.8 * std::min(cfg.powerRrh1 / tr1, cfg.powerRrh2 / tr2);
  return sol.scaled(std::min(1.0, c));
}

int run_selftest_command() {
  SelfTest st;

  {
    SystemConfig cfg;
    cfg.numUes = 2;
    cfg.antennasUe = {1, 1};
    const ChannelSet a = sample_channels(cfg, 7);
    const ChannelSet b = sample_channels(cfg, 7);
    bool same = true;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        same = same && (a.of(k, j) - b.of(k, j)).cwiseAbs().maxCoeff() == 0.0;
    st.check(same, "channel sampling deterministic in the seed");
  }
  {
    std::mt19937_64 rng(1);
    bool ok = true;
    for (int rep = 0; rep < 50 && ok; ++rep) {
      SystemConfig cfg;
      cfg.numUes = 1 + (rep % 2);
      cfg.antennasRrh1 = 1 + (rep % 2);
      cfg.antennasRrh2 = 1;
      cfg.antennasUe.assign(cfg.numUes, 1 + (rep / 2) % 2);
      cfg.worstCaseDelay = rep % 3;
      cfg.powerRrh1 = cfg.powerRrh2 = 4.0;
      const ChannelSet ch = sample_channels(cfg, 100 + rep);
      const PrecoderSolution sol = random_feasible(cfg, rng);
      const int n1 = cfg.antennasRrh1, n2 = cfg.antennasRrh2;
      const int slots = cfg.delayCount();
      for (int k = 0; k < cfg.numUes && ok; ++k) {
        for (int d = 0; d < slots && ok; ++d) {
          const CMat joint = oracle_joint_covariance(sol, ch, cfg, k, d);
          std::vector<int> slot, x2, vbar, y;
          for (int i = 0; i < n1; ++i) slot.push_back(d * n1 + i);
          for (int i = 0; i < n2; ++i) x2.push_back(slots * n1 + i);
          for (int i = 0; i < slots * n1; ++i) vbar.push_back(i);
          for (int i = 0; i < cfg.antennasUe[k]; ++i) y.push_back(slots * n1 + n2 + i);
          ok = ok && std::abs(mi_direct(sol, ch, cfg, k, d) -
                              mi_gaussian_oracle(joint, slot, y)) < 1e-8;
          ok = ok && std::abs(mi_conditional(sol, ch, cfg, k, d) -
                              mi_gaussian_oracle(joint, x2, y, vbar)) < 1e-8;
        }
      }
    }
    st.check(ok, "closed-form rates match the Gaussian-entropy oracle (50 draws)");
  }
  {
    std::mt19937_64 rng(3);
    bool tangent = true, minorant = true;
    for (int rep = 0; rep < 60 && tangent && minorant; ++rep) {
      SystemConfig cfg;
      cfg.numUes = 1 + (rep % 2);
      cfg.antennasUe.assign(cfg.numUes, 1);
      cfg.worstCaseDelay = rep % 2;
      cfg.powerRrh1 = cfg.powerRrh2 = 4.0;
      const ChannelSet ch = sample_channels(cfg, 500 + rep);
      const PrecoderSolution p = random_feasible(cfg, rng);
      const PrecoderSolution q = random_feasible(cfg, rng);
      const Anchor anchor = build_anchor(p, ch, cfg);
      for (int k = 0; k < cfg.numUes; ++k) {
        for (int d = 0; d < cfg.delayCount(); ++d) {
          tangent = tangent && std::abs(surrogate_rate(p, anchor, ch, k, d) -
                                        rate_f(p, ch, cfg, k, d)) < 1e-9;
          minorant = minorant && surrogate_rate(q, anchor, ch, k, d) <=
                                     rate_f(q, ch, cfg, k, d) + 1e-9;
        }
      }
    }
    st.check(tangent, "surrogate tangency at the anchor (60 draws)");
    st.check(minorant, "surrogate minorization (60 draws)");
  }
  {
    SystemConfig cfg;
    cfg.numUes = 2;
    cfg.antennasUe = {1, 1};
    cfg.worstCaseDelay = 1;
    cfg.powerRrh1 = cfg.powerRrh2 = 10.0;
    bool monotone = true;
    for (int rep = 0; rep < 3; ++rep) {
      const ChannelSet ch = sample_channels(cfg, 900 + rep);
      const CccpTrace tr = run_cccp(cfg, ch, Scheme::robust());
      for (std::size_t t = 1; t < tr.objective.size(); ++t)
        monotone = monotone && tr.objective[t] >= tr.objective[t - 1] - 1e-9;
    }
    st.check(monotone, "CCCP objective monotone on random instances");
  }
  {
    SystemConfig cfg;
    cfg.numUes = 1;
    cfg.antennasUe = {1};
    cfg.powerRrh1 = cfg.powerRrh2 = 1.0;
    ChannelSet ch;
    ch.h.resize(1);
    ch.h[0][0] = CMat::Ones(1, 1);
    ch.h[0][1] = CMat::Ones(1, 1);
    const CccpTrace tr = run_cccp(cfg, ch, Scheme::robust());
    st.check(std::abs(tr.finalReport.minRate - std::log2(5.0)) < 1e-3,
             "SISO instance reaches the coherent-combining optimum");
  }
  {
    SystemConfig cfg;
    cfg.numUes = 2;
    cfg.antennasUe = {1, 1};
    cfg.worstCaseDelay = 1;
    cfg.powerRrh1 = cfg.powerRrh2 = 10.0;
    const ChannelSet ch = sample_channels(cfg, 77);
    const auto suite = run_scheme_suite(cfg, ch, {});
    const double tx = suite.at(SchemeKind::TxSelection).finalReport.minRate;
    const double nc = suite.at(SchemeKind::NonCooperative).finalReport.minRate;
    const double rb = suite.at(SchemeKind::Robust).finalReport.minRate;
    const double ge = suite.at(SchemeKind::SyncGenie).finalReport.minRate;
    st.check(tx <= nc + 1e-6 && nc <= rb + 1e-6 && rb <= ge + 1e-6,
             "scheme ordering tx_selection <= non_cooperative <= robust <= sync_genie");
  }

  std::printf("%s\n", st.failures == 0 ? "selftest: all checks passed"
                                       : "selftest: FAILURES present");
  return st.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust asynchronous cooperative downlink precoding experiments"};
  app.require_subcommand(1);

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo scheme sweep");
  std::string configPath, preset, schemesCsv, outPath, format;
  int trials = -1, threads = -1, maxOuter = -1, delay = -1;
  std::uint64_t seed = 0;
  bool seedSet = false, dumpTrials = false, noWarmStart = false;
  double tolOuter = -1.0;
  std::vector<double> snrDb, sweepValues, thetaDeg;
  std::string sweepVariable;
  sweep->add_option("--config", configPath, "Plan file (key = value lines)");
  sweep->add_option("--preset", preset, "fig2 or fig3")
      ->check(CLI::IsMember({"fig2", "fig3"}));
  sweep->add_option("--schemes", schemesCsv, "Comma-separated scheme list");
  sweep->add_option("--trials", trials, "Channel realizations per sweep point");
  sweep->add_option("--seed", seed, "Master seed")->each([&](const std::string&) {
    seedSet = true;
  });
  sweep->add_option("--out", outPath, "Output path");
  sweep->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sweep->add_flag("--dump-trials", dumpTrials, "Also write a per-trial audit file");
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware)");
  sweep->add_option("--snr-db", snrDb, "SNR sweep values in dB")->delimiter(',');
  sweep->add_option("--sweep-variable", sweepVariable,
                    "snr_db|num_ues|phase_offset_deg|worst_case_delay");
  sweep->add_option("--sweep-values", sweepValues, "Sweep values")->delimiter(',');
  sweep->add_option("--theta-deg", thetaDeg,
                    "Evaluation phase offsets in degrees (fig3 default: 0,20,45)")
      ->delimiter(',');
  sweep->add_option("--delay", delay, "Worst-case delay D");
  sweep->add_option("--max-outer", maxOuter, "Outer iteration cap");
  sweep->add_option("--tol-outer", tolOuter, "Outer stopping improvement (bits)");
  sweep->add_flag("--no-warm-start", noWarmStart, "Identity initialization everywhere");

  // ---- single ----
  auto* single = app.add_subcommand("single", "Solve one instance and print the report");
  std::string sScheme = "robust";
  double sSnrDb = 10.0, sTheta = 0.0;
  int sUes = 2, sDelay = 1, sAntRrh = 1, sAntUe = 1, sGenie = 0;
  std::uint64_t sSeed = 1;
  int sMaxOuter = 50;
  double sTolOuter = 1e-5;
  bool sNoWarm = false;
  single->add_option("--scheme", sScheme, "Scheme name");
  single->add_option("--snr-db", sSnrDb, "Symmetric per-RRH SNR in dB");
  single->add_option("--num-ues", sUes, "Number of UEs");
  single->add_option("--delay", sDelay, "Worst-case delay D");
  single->add_option("--antennas-rrh", sAntRrh, "Antennas per RRH");
  single->add_option("--antennas-ue", sAntUe, "Antennas per UE");
  single->add_option("--seed", sSeed, "Channel seed");
  single->add_option("--theta-deg", sTheta, "Evaluation phase offset (degrees)");
  single->add_option("--genie-delay", sGenie, "Known delay for sync_genie");
  single->add_option("--max-outer", sMaxOuter, "Outer iteration cap");
  single->add_option("--tol-outer", sTolOuter, "Outer stopping improvement (bits)");
  single->add_flag("--no-warm-start", sNoWarm, "Identity initialization");

  // ---- selftest ----
  app.add_subcommand("selftest", "Run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      ExperimentPlan plan;
      if (!configPath.empty()) {
        plan = parse_plan_file(configPath);
      } else if (preset == "fig3") {
        plan = fig3_preset();
      } else {
        plan = fig2_preset();
      }
      if (preset == "fig3" && thetaDeg.empty()) thetaDeg = {0, 20, 45};
      if (!schemesCsv.empty()) {
        plan.schemes.clear();
        std::stringstream ss(schemesCsv);
        std::string item;
        while (std::getline(ss, item, ','))
          plan.schemes.push_back(scheme_from_string(item));
      }
      if (trials > 0) plan.trials = trials;
      if (seedSet) plan.masterSeed = seed;
      if (!outPath.empty()) plan.outputPath = outPath;
      if (!format.empty())
        plan.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
      if (dumpTrials) plan.dumpTrials = true;
      if (threads >= 0) plan.threads = threads;
      if (!sweepVariable.empty())
        plan.sweepVariable = sweep_variable_from_string(sweepVariable);
      if (!sweepValues.empty()) plan.sweepValues = sweepValues;
      if (!snrDb.empty() && plan.sweepVariable == SweepVariable::SnrDb)
        plan.sweepValues = snrDb;
      if (delay >= 0) plan.baseConfig.worstCaseDelay = delay;
      if (maxOuter > 0) plan.cccp.maxOuter = maxOuter;
      if (tolOuter >= 0.0) plan.cccp.tolOuter = tolOuter;
      if (noWarmStart) plan.warmStart = false;
      return run_sweep_command(plan, thetaDeg);
    }
    if (single->parsed()) {
      SystemConfig cfg;
      cfg.numUes = sUes;
      cfg.antennasRrh1 = sAntRrh;
      cfg.antennasRrh2 = sAntRrh;
      cfg.antennasUe.assign(sUes, sAntUe);
      cfg.worstCaseDelay = sDelay;
      cfg.powerRrh1 = std::pow(10.0, sSnrDb / 10.0);
      cfg.powerRrh2 = cfg.powerRrh1;
      cfg.phaseOffsetEval = sTheta * kPi / 180.0;
      CccpOptions cccp;
      cccp.maxOuter = sMaxOuter;
      cccp.tolOuter = sTolOuter;
      return run_single_command(cfg, sScheme, sSeed, sGenie, cccp, !sNoWarm);
    }
    return run_selftest_command();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
