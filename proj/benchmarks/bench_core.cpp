// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "racoop/cccp.hpp"
#include "racoop/harness.hpp"
#include "racoop/surrogate.hpp"

using namespace racoop;

namespace {

SystemConfig fig2_config(int delay, double p) {
  SystemConfig cfg;
  cfg.numUes = 2;
  cfg.antennasUe = {1, 1};
  cfg.worstCaseDelay = delay;
  cfg.powerRrh1 = p;
  cfg.powerRrh2 = p;
  return cfg;
}

PrecoderSolution spread_solution(const SystemConfig& cfg) {
  PrecoderSolution sol = PrecoderSolution::zeros(cfg);
  for (int k = 0; k < cfg.numUes; ++k) {
    sol.rrh1Cov[k](0, 0) = 0.4 * cfg.powerRrh1 / cfg.numUes;
    sol.rrh2Cov[k](0, 0) = 0.4 * cfg.powerRrh2 / cfg.numUes;
    for (int d = 0; d < cfg.delayCount(); ++d)
      sol.crossCorr[k][d](0, 0) = 0.1 * std::sqrt(cfg.powerRrh1 * cfg.powerRrh2) /
                                  (cfg.numUes * cfg.delayCount());
  }
  return sol;
}

void BM_WorstCaseRates(benchmark::State& state) {
  const SystemConfig cfg = fig2_config(2, 10.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  const PrecoderSolution sol = spread_solution(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(worst_case_rates(sol, ch, cfg).minRate);
  }
}
BENCHMARK(BM_WorstCaseRates);

void BM_PairContext(benchmark::State& state) {
  const SystemConfig cfg = fig2_config(2, 10.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  const PrecoderSolution sol = spread_solution(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_pair_context(sol, ch, cfg, 0, 1).tripleCov(0, 0));
  }
}
BENCHMARK(BM_PairContext);

void BM_GaussianOracle(benchmark::State& state) {
  const SystemConfig cfg = fig2_config(2, 10.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  const PrecoderSolution sol = spread_solution(cfg);
  const CMat joint = oracle_joint_covariance(sol, ch, cfg, 0, 1);
  const std::vector<int> x2 = {3};
  const std::vector<int> y = {4};
  const std::vector<int> vbar = {0, 1, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mi_gaussian_oracle(joint, x2, y, vbar));
  }
}
BENCHMARK(BM_GaussianOracle);

void BM_SurrogateRate(benchmark::State& state) {
  const SystemConfig cfg = fig2_config(1, 10.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  const PrecoderSolution anchorPoint = spread_solution(cfg);
  const Anchor anchor = build_anchor(anchorPoint, ch, cfg);
  const PrecoderSolution sol = anchorPoint.scaled(0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(surrogate_rate(sol, anchor, ch, 0, 0));
  }
}
BENCHMARK(BM_SurrogateRate);

void BM_Subproblem(benchmark::State& state) {
  const SystemConfig cfg = fig2_config(1, 10.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  const PrecoderSolution anchorPoint = spread_solution(cfg);
  const Anchor anchor = build_anchor(anchorPoint, ch, cfg);
  for (auto _ : state) {
    SubproblemSpec spec;
    spec.anchor = &anchor;
    spec.channels = &ch;
    spec.config = &cfg;
    benchmark::DoNotOptimize(solve_subproblem(spec).rMin);
  }
}
BENCHMARK(BM_Subproblem);

void BM_CccpRobust(benchmark::State& state) {
  const SystemConfig cfg = fig2_config(1, 10.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_cccp(cfg, ch, Scheme::robust()).finalReport.minRate);
  }
}
BENCHMARK(BM_CccpRobust)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
