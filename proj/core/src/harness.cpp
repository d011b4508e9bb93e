// SPDX-License-Identifier: Apache-2.0
#include "racoop/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace racoop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::SnrDb: return "snr_db";
    case SweepVariable::NumUes: return "num_ues";
    case SweepVariable::PhaseOffsetDeg: return "phase_offset_deg";
    case SweepVariable::WorstCaseDelay: return "worst_case_delay";
  }
  return "unknown";
}

SweepVariable sweep_variable_from_string(const std::string& s) {
  if (s == "snr_db") return SweepVariable::SnrDb;
  if (s == "num_ues") return SweepVariable::NumUes;
  if (s == "phase_offset_deg") return SweepVariable::PhaseOffsetDeg;
  if (s == "worst_case_delay") return SweepVariable::WorstCaseDelay;
  throw std::invalid_argument("unknown sweep variable: " + s);
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "robust") return Scheme::robust();
  if (s == "tx_selection") return Scheme::txSelection();
  if (s == "non_cooperative") return Scheme::nonCooperative();
  if (s == "non_robust_coop") return Scheme::nonRobustCoop();
  if (s == "sync_genie") return Scheme::syncGenie(0);
  throw std::invalid_argument("unknown scheme: " + s);
}

void ExperimentPlan::validate() const {
  baseConfig.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (sweepValues.empty()) throw std::invalid_argument("sweepValues must be non-empty");
  if (schemes.empty()) throw std::invalid_argument("schemes must be non-empty");
  for (double v : sweepValues) {
    const SystemConfig cfg = config_for(*this, v);
    cfg.validate();
  }
}

std::uint64_t trial_seed(std::uint64_t masterSeed, int sweepIdx, int trialIdx) {
  std::uint64_t s = splitmix64(masterSeed);
  s = splitmix64(s ^ (static_cast<std::uint64_t>(sweepIdx) + 1) * 0x9E3779B97F4A7C15ull);
  s = splitmix64(s ^ (static_cast<std::uint64_t>(trialIdx) + 1) * 0xBF58476D1CE4E5B9ull);
  return s;
}

SystemConfig config_for(const ExperimentPlan& plan, double sweepValue) {
  SystemConfig cfg = plan.baseConfig;
  switch (plan.sweepVariable) {
    case SweepVariable::SnrDb: {
      const double p = db_to_linear(sweepValue);
      cfg.powerRrh1 = p;
      cfg.powerRrh2 = p;
      break;
    }
    case SweepVariable::NumUes: {
      const int n = static_cast<int>(std::lround(sweepValue));
      if (n < 1) throw std::invalid_argument("numUes sweep value must be >= 1");
      cfg.numUes = n;
      cfg.antennasUe.assign(n, 1);
      if (plan.fig3AntennaRule) {
        if (n % 2 != 0)
          throw std::invalid_argument(
              "antennasRrh = numUes/2 preset needs an even UE count");
        cfg.antennasRrh1 = n / 2;
        cfg.antennasRrh2 = n / 2;
      }
      break;
    }
    case SweepVariable::PhaseOffsetDeg:
      cfg.phaseOffsetEval = sweepValue * kPi / 180.0;
      break;
    case SweepVariable::WorstCaseDelay: {
      const int d = static_cast<int>(std::lround(sweepValue));
      if (d < 0) throw std::invalid_argument("delay sweep value must be >= 0");
      cfg.worstCaseDelay = d;
      break;
    }
  }
  return cfg;
}

namespace {

struct TrialOutcome {
  double minRate = 0.0;
  int iterations = 0;
  bool failed = false;
};

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentPlan& plan,
                                 std::vector<TrialRecord>* trialDump) {
  plan.validate();
  const int numSweep = static_cast<int>(plan.sweepValues.size());
  const int numSchemes = static_cast<int>(plan.schemes.size());

  std::vector<SchemeKind> wanted;
  for (const Scheme& s : plan.schemes) wanted.push_back(s.kind);

  // outcome[(si * trials + ti) * numSchemes + schemeIdx]
  std::vector<TrialOutcome> outcomes(
      static_cast<std::size_t>(numSweep) * plan.trials * numSchemes);

  auto runItem = [&](int si, int ti) {
    const SystemConfig cfg = config_for(plan, plan.sweepValues[si]);
    const std::uint64_t seed = trial_seed(plan.masterSeed, si, ti);
    const ChannelSet channels = sample_channels(cfg, splitmix64(seed + 1));

    SuiteOptions opts;
    opts.warmStart = plan.warmStart;
    opts.cccp = plan.cccp;
    opts.wanted = wanted;
    if (cfg.worstCaseDelay > 0) {
      std::mt19937_64 rng(splitmix64(seed + 2));
      std::uniform_int_distribution<int> pick(0, cfg.worstCaseDelay);
      opts.genieDelay = pick(rng);
    }

    std::map<SchemeKind, CccpTrace> suite;
    bool crashed = false;
    try {
      suite = run_scheme_suite(cfg, channels, opts);
    } catch (const std::exception&) {
      crashed = true;
    }
    for (int sc = 0; sc < numSchemes; ++sc) {
      TrialOutcome& slot =
          outcomes[(static_cast<std::size_t>(si) * plan.trials + ti) * numSchemes + sc];
      auto it = crashed ? suite.end() : suite.find(plan.schemes[sc].kind);
      if (it == suite.end() || it->second.solverFailed) {
        slot.failed = true;
        if (it != suite.end()) slot.iterations = it->second.iterations;
      } else {
        slot.minRate = it->second.finalReport.minRate;
        slot.iterations = it->second.iterations;
      }
    }
  };

  const int items = numSweep * plan.trials;
  int threadCount = plan.threads > 0
                        ? plan.threads
                        : static_cast<int>(std::thread::hardware_concurrency());
  threadCount = std::max(1, std::min(threadCount, items));
  if (threadCount == 1) {
    for (int i = 0; i < items; ++i) runItem(i / plan.trials, i % plan.trials);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threadCount);
    for (int w = 0; w < threadCount; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < items; i = next.fetch_add(1)) {
          runItem(i / plan.trials, i % plan.trials);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<ResultRow> rows;
  for (int si = 0; si < numSweep; ++si) {
    for (int sc = 0; sc < numSchemes; ++sc) {
      ResultRow row;
      row.scheme = plan.schemes[sc].name();
      row.sweepVariable = to_string(plan.sweepVariable);
      row.sweepValue = plan.sweepValues[si];
      double sum = 0.0, sumSq = 0.0, sumIter = 0.0;
      for (int ti = 0; ti < plan.trials; ++ti) {
        const TrialOutcome& o =
            outcomes[(static_cast<std::size_t>(si) * plan.trials + ti) * numSchemes + sc];
        if (trialDump) {
          trialDump->push_back({row.scheme, row.sweepVariable, row.sweepValue, ti,
                                o.minRate, o.iterations, o.failed});
        }
        if (o.failed) {
          ++row.failures;
          continue;
        }
        ++row.trialsUsed;
        sum += o.minRate;
        sumSq += o.minRate * o.minRate;
        sumIter += o.iterations;
      }
      if (row.trialsUsed > 0) {
        row.avgMinRate = sum / row.trialsUsed;
        row.avgIterations = sumIter / row.trialsUsed;
        if (row.trialsUsed > 1) {
          const double var = std::max(
              0.0, (sumSq - sum * sum / row.trialsUsed) / (row.trialsUsed - 1));
          row.stdErr = std::sqrt(var / row.trialsUsed);
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void emit_results(const std::vector<ResultRow>& rows, OutputFormat format,
                  const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("no result rows to emit");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output path: " + path);
  if (format == OutputFormat::Csv) {
    out << "scheme,sweep_variable,sweep_value,trials,avg_min_rate_bits,"
           "std_err,avg_iterations,failures\n";
    for (const ResultRow& r : rows) {
      out << r.scheme << ',' << r.sweepVariable << ',' << fmt9(r.sweepValue) << ','
          << r.trialsUsed << ',' << fmt9(r.avgMinRate) << ',' << fmt9(r.stdErr) << ','
          << fmt9(r.avgIterations) << ',' << r.failures << '\n';
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const ResultRow& r : rows) {
      arr.push_back({{"scheme", r.scheme},
                     {"sweep_variable", r.sweepVariable},
                     {"sweep_value", r.sweepValue},
                     {"trials", r.trialsUsed},
                     {"avg_min_rate_bits", r.avgMinRate},
                     {"std_err", r.stdErr},
                     {"avg_iterations", r.avgIterations},
                     {"failures", r.failures}});
    }
    out << arr.dump(2) << '\n';
  }
}

void emit_trial_dump(const std::vector<TrialRecord>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("no trial records to emit");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output path: " + path);
  out << "scheme,sweep_variable,sweep_value,trial,min_rate_bits,iterations,failed\n";
  for (const TrialRecord& r : records) {
    out << r.scheme << ',' << r.sweepVariable << ',' << fmt9(r.sweepValue) << ','
        << r.trial << ',' << fmt9(r.minRate) << ',' << r.iterations << ','
        << (r.failed ? 1 : 0) << '\n';
  }
}

ExperimentPlan fig2_preset() {
  ExperimentPlan plan;
  plan.baseConfig.numUes = 2;
  plan.baseConfig.antennasRrh1 = 1;
  plan.baseConfig.antennasRrh2 = 1;
  plan.baseConfig.antennasUe = {1, 1};
  plan.baseConfig.worstCaseDelay = 1;
  plan.baseConfig.phaseOffsetEval = 0.0;
  plan.sweepVariable = SweepVariable::SnrDb;
  plan.sweepValues = {-5, 0, 5, 10, 15, 20};
  plan.schemes = {Scheme::robust(), Scheme::txSelection(), Scheme::nonCooperative(),
                  Scheme::nonRobustCoop(), Scheme::syncGenie(0)};
  plan.trials = 100;
  plan.outputPath = "fig2.csv";
  return plan;
}

ExperimentPlan fig3_preset() {
  ExperimentPlan plan;
  plan.baseConfig.numUes = 2;
  plan.baseConfig.antennasRrh1 = 1;
  plan.baseConfig.antennasRrh2 = 1;
  plan.baseConfig.antennasUe = {1, 1};
  plan.baseConfig.worstCaseDelay = 1;
  plan.baseConfig.powerRrh1 = db_to_linear(10.0);
  plan.baseConfig.powerRrh2 = db_to_linear(10.0);
  plan.sweepVariable = SweepVariable::NumUes;
  plan.sweepValues = {2, 4, 6};
  plan.fig3AntennaRule = true;
  plan.schemes = {Scheme::robust(), Scheme::txSelection(), Scheme::nonCooperative(),
                  Scheme::nonRobustCoop(), Scheme::syncGenie(0)};
  plan.trials = 100;
  plan.outputPath = "fig3.csv";
  return plan;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentPlan parse_plan_text(const std::string& text) {
  ExperimentPlan plan;
  plan.schemes = {Scheme::robust()};
  plan.sweepValues = {10.0};
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("malformed plan line (expected key = value): " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "num_ues") {
        plan.baseConfig.numUes = std::stoi(value);
        plan.baseConfig.antennasUe.assign(plan.baseConfig.numUes, 1);
      } else if (key == "antennas_rrh1") {
        plan.baseConfig.antennasRrh1 = std::stoi(value);
      } else if (key == "antennas_rrh2") {
        plan.baseConfig.antennasRrh2 = std::stoi(value);
      } else if (key == "antennas_ue") {
        const auto items = split_list(value);
        std::vector<int> ue;
        for (const auto& it : items) ue.push_back(std::stoi(it));
        if (static_cast<int>(ue.size()) == 1)
          plan.baseConfig.antennasUe.assign(plan.baseConfig.numUes, ue[0]);
        else
          plan.baseConfig.antennasUe = ue;
      } else if (key == "worst_case_delay") {
        plan.baseConfig.worstCaseDelay = std::stoi(value);
      } else if (key == "snr_db") {
        plan.baseConfig.powerRrh1 = db_to_linear(std::stod(value));
        plan.baseConfig.powerRrh2 = plan.baseConfig.powerRrh1;
      } else if (key == "power_rrh1_db") {
        plan.baseConfig.powerRrh1 = db_to_linear(std::stod(value));
      } else if (key == "power_rrh2_db") {
        plan.baseConfig.powerRrh2 = db_to_linear(std::stod(value));
      } else if (key == "phase_offset_deg") {
        plan.baseConfig.phaseOffsetEval = std::stod(value) * kPi / 180.0;
      } else if (key == "sweep_variable") {
        plan.sweepVariable = sweep_variable_from_string(value);
      } else if (key == "sweep_values") {
        plan.sweepValues.clear();
        for (const auto& it : split_list(value)) plan.sweepValues.push_back(std::stod(it));
      } else if (key == "schemes") {
        plan.schemes.clear();
        for (const auto& it : split_list(value)) plan.schemes.push_back(scheme_from_string(it));
      } else if (key == "trials") {
        plan.trials = std::stoi(value);
      } else if (key == "master_seed") {
        plan.masterSeed = std::stoull(value);
      } else if (key == "output_path") {
        plan.outputPath = value;
      } else if (key == "format") {
        if (value == "csv") plan.format = OutputFormat::Csv;
        else if (value == "json") plan.format = OutputFormat::Json;
        else throw std::invalid_argument("unknown format: " + value);
      } else if (key == "fig3_antenna_rule") {
        plan.fig3AntennaRule = std::stoi(value) != 0;
      } else if (key == "dump_trials") {
        plan.dumpTrials = std::stoi(value) != 0;
      } else if (key == "warm_start") {
        plan.warmStart = std::stoi(value) != 0;
      } else if (key == "threads") {
        plan.threads = std::stoi(value);
      } else if (key == "max_outer") {
        plan.cccp.maxOuter = std::stoi(value);
      } else if (key == "tol_outer") {
        plan.cccp.tolOuter = std::stod(value);
      } else {
        throw std::invalid_argument("unknown plan key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed value for key '" + key + "': " + value);
    }
  }
  return plan;
}

ExperimentPlan parse_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open plan file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_plan_text(buffer.str());
}

}  // namespace racoop
