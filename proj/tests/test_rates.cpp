// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "racoop/rates.hpp"
#include "testutil.hpp"

using namespace racoop;
namespace tu = racoop::testutil;

namespace {

/// Oracle-side mutual information for one (ue, delay) pair, via the first-
/// principles joint covariance. Block order: (vbar, x2, y).
struct OraclePair {
  double direct;
  double conditional;
};

OraclePair oracle_pair(const PrecoderSolution& sol, const ChannelSet& ch,
                       const SystemConfig& cfg, int k, int d) {
  const CMat joint = oracle_joint_covariance(sol, ch, cfg, k, d);
  const int n1 = cfg.antennasRrh1;
  const int n2 = cfg.antennasRrh2;
  const int slots = cfg.delayCount();
  const int ny = cfg.antennasUe[k];
  const auto slot = tu::index_range(d * n1, n1);
  const auto x2 = tu::index_range(slots * n1, n2);
  const auto vbar = tu::index_range(0, slots * n1);
  const auto y = tu::index_range(slots * n1 + n2, ny);
  return {mi_gaussian_oracle(joint, slot, y), mi_gaussian_oracle(joint, x2, y, vbar)};
}

}  // namespace

TEST_CASE("received covariance closed forms") {
  SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
  const ChannelSet ch = tu::unit_channels(cfg);

  SUBCASE("coherent scalar case sums to 5") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {1.0});
    const CMat c = received_covariance(sol, ch, cfg, 0, 0);
    CHECK(std::real(c(0, 0)) == doctest::Approx(5.0));
  }
  SUBCASE("zero solution leaves only noise") {
    const PrecoderSolution sol = PrecoderSolution::zeros(cfg);
    const CMat c = received_covariance(sol, ch, cfg, 0, 0);
    CHECK(std::real(c(0, 0)) == doctest::Approx(1.0));
  }
  SUBCASE("no cross term: 1 + a + b for every delay") {
    SystemConfig cfg1 = tu::scalar_config(1, 2, 10.0, 10.0);
    const ChannelSet ch1 = tu::unit_channels(cfg1);
    const PrecoderSolution sol = tu::scalar_solution(cfg1, 0.7, 1.3, {0.0, 0.0, 0.0});
    for (int d = 0; d <= 2; ++d) {
      const CMat c = received_covariance(sol, ch1, cfg1, 0, d);
      CHECK(std::real(c(0, 0)) == doctest::Approx(1.0 + 0.7 + 1.3));
    }
  }
}

TEST_CASE("direct mutual information closed forms") {
  SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
  const ChannelSet ch = tu::unit_channels(cfg);

  SUBCASE("full correlation reaches log2 5") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {1.0});
    CHECK(mi_direct(sol, ch, cfg, 0, 0) == doctest::Approx(std::log2(5.0)).epsilon(1e-12));
  }
  SUBCASE("no signal means zero information") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 0.0, 1.0, {0.0});
    CHECK(mi_direct(sol, ch, cfg, 0, 0) == doctest::Approx(0.0));
  }
  SUBCASE("independent signals give log2(3/2)") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {0.0});
    CHECK(mi_direct(sol, ch, cfg, 0, 0) ==
          doctest::Approx(std::log2(1.5)).epsilon(1e-12));
  }
}

TEST_CASE("conditional mutual information closed forms") {
  SUBCASE("full cross-correlation leaves no residual uncertainty") {
    SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
    const ChannelSet ch = tu::unit_channels(cfg);
    const double w = std::sqrt(1.0 * 0.5);  // sqrt(V * Sigma): x2 = c * v
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 0.5, {w});
    CHECK(mi_conditional(sol, ch, cfg, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("one fully-coupled slot still determines x2 given vbar") {
    SystemConfig cfg = tu::scalar_config(1, 1, 10.0, 10.0);
    const ChannelSet ch = tu::unit_channels(cfg);
    const double w = std::sqrt(1.0 * 0.5);
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 0.5, {w, 0.0});
    CHECK(mi_conditional(sol, ch, cfg, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(mi_conditional(sol, ch, cfg, 0, 1) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("independent RRH-2 link is plain AWGN") {
    SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
    const ChannelSet ch = tu::unit_channels(cfg);
    const PrecoderSolution sol = tu::scalar_solution(cfg, 0.4, 1.0, {0.0});
    CHECK(mi_conditional(sol, ch, cfg, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("degenerate RRH-2 signal carries nothing") {
    SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
    const ChannelSet ch = tu::unit_channels(cfg);
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 0.0, {0.0});
    CHECK(mi_conditional(sol, ch, cfg, 0, 0) == doctest::Approx(0.0));
  }
}

TEST_CASE("pair rate closed forms") {
  SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
  const ChannelSet ch = tu::unit_channels(cfg);

  SUBCASE("coherent combining reaches log2(1 + (sqrt P1 + sqrt P2)^2)") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {1.0});
    CHECK(rate_f(sol, ch, cfg, 0, 0) == doctest::Approx(std::log2(5.0)).epsilon(1e-12));
  }
  SUBCASE("independent signals obey the chain rule: log2 3") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {0.0});
    CHECK(rate_f(sol, ch, cfg, 0, 0) == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
  }
  SUBCASE("zero solution has zero rate") {
    const PrecoderSolution sol = PrecoderSolution::zeros(cfg);
    CHECK(rate_f(sol, ch, cfg, 0, 0) == doctest::Approx(0.0));
  }
}

TEST_CASE("worst-case report") {
  SUBCASE("no cross terms: per-pair rates identical across delays") {
    std::mt19937_64 rng(11);
    SystemConfig cfg = tu::scalar_config(2, 2, 4.0, 4.0);
    const ChannelSet ch = sample_channels(cfg, 21);
    PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k)
      for (int d = 0; d < cfg.delayCount(); ++d) sol.crossCorr[k][d].setZero();
    const RateReport rep = worst_case_rates(sol, ch, cfg);
    for (int k = 0; k < cfg.numUes; ++k) {
      for (int d = 1; d < cfg.delayCount(); ++d) {
        CHECK(std::abs(rep.perPair[k][d] - rep.perPair[k][0]) < 1e-9);
      }
    }
  }
  SUBCASE("single delay set reduces to the d = 0 column") {
    std::mt19937_64 rng(13);
    SystemConfig cfg = tu::scalar_config(2, 0, 4.0, 4.0);
    const ChannelSet ch = sample_channels(cfg, 22);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    const RateReport rep = worst_case_rates(sol, ch, cfg);
    for (int k = 0; k < cfg.numUes; ++k) CHECK(rep.perUe[k] == rep.perPair[k][0]);
  }
  SUBCASE("slot-0-only coupling is punished at the other delay") {
    SystemConfig cfg = tu::scalar_config(1, 1, 10.0, 10.0);
    const ChannelSet ch = tu::unit_channels(cfg);
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {1.0, 0.0});
    const RateReport rep = worst_case_rates(sol, ch, cfg);
    const OraclePair o0 = oracle_pair(sol, ch, cfg, 0, 0);
    const OraclePair o1 = oracle_pair(sol, ch, cfg, 0, 1);
    CHECK(rep.perPair[0][0] == doctest::Approx(o0.direct + o0.conditional).epsilon(1e-10));
    CHECK(rep.perPair[0][1] == doctest::Approx(o1.direct + o1.conditional).epsilon(1e-10));
    CHECK(rep.perPair[0][0] == doctest::Approx(std::log2(5.0)).epsilon(1e-12));
    CHECK(rep.perUe[0] == rep.perPair[0][1]);
    CHECK(rep.minRate == rep.perUe[0]);
  }
}

TEST_CASE("pair context blocks and selectors") {
  std::mt19937_64 rng(977);
  SystemConfig cfg = tu::scalar_config(2, 2, 4.0, 4.0);
  cfg.antennasRrh1 = 2;
  cfg.antennasUe = {2, 1};
  const ChannelSet ch = sample_channels(cfg, 55);
  const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
  for (int k = 0; k < cfg.numUes; ++k) {
    for (int d = 0; d < cfg.delayCount(); ++d) {
      const PairContext ctx = build_pair_context(sol, ch, cfg, k, d);
      // Noise floor: rxCov - signalCov is exactly the identity.
      const CMat noise = ctx.rxCov - ctx.signalCov;
      CHECK((noise - CMat::Identity(noise.rows(), noise.cols())).cwiseAbs().maxCoeff() ==
            0.0);
      CHECK(min_eig_hermitian(ctx.rxCov) >= 1.0 - 1e-9);
      // Selectors are 0/1 with a single 1 per row.
      for (const RMat* sel : {&ctx.sel1, &ctx.sel2, &ctx.slotSel}) {
        for (int r = 0; r < sel->rows(); ++r) {
          int ones = 0;
          for (int c = 0; c < sel->cols(); ++c) {
            const double v = (*sel)(r, c);
            CHECK((v == 0.0 || v == 1.0));
            if (v == 1.0) ++ones;
          }
          CHECK(ones == 1);
        }
      }
      // slotSel picks slot d of vbar: slotSel * vbarRxCross = E[v_d y^H].
      const CMat vy = ctx.slotSel.cast<Cplx>() * ctx.vbarRxCross;
      const CMat expect = sol.rrh1Cov[k] * ch.of(k, 0).adjoint() +
                          sol.crossCorr[k][d] * ch.of(k, 1).adjoint();
      CHECK((vy - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("gaussian mutual information oracle basics") {
  SUBCASE("independent blocks carry zero information") {
    CMat cov = CMat::Zero(3, 3);
    cov(0, 0) = 2.0;
    cov(1, 1) = 1.0;
    cov(2, 2) = 0.5;
    CHECK(mi_gaussian_oracle(cov, {0}, {1, 2}) == doctest::Approx(0.0));
  }
  SUBCASE("bivariate closed form") {
    CMat cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    CHECK(mi_gaussian_oracle(cov, {0}, {1}) ==
          doctest::Approx(-std::log2(0.75)).epsilon(1e-12));
    CHECK(mi_gaussian_oracle(cov, {0}, {1}) == doctest::Approx(0.4150375).epsilon(1e-6));
  }
  SUBCASE("invalid partitions are rejected") {
    CMat cov = CMat::Identity(2, 2);
    CHECK_THROWS_AS(mi_gaussian_oracle(cov, {0}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(mi_gaussian_oracle(cov, {0}, {5}), std::invalid_argument);
    CHECK_THROWS_AS(mi_gaussian_oracle(cov, {}, {1}), std::invalid_argument);
  }
}

TEST_CASE("closed-form rates agree with the entropy oracle") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 60; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const ChannelSet ch = sample_channels(cfg, 1000 + rep);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng, 1e-3);
    for (int k = 0; k < cfg.numUes; ++k) {
      for (int d = 0; d < cfg.delayCount(); ++d) {
        const OraclePair o = oracle_pair(sol, ch, cfg, k, d);
        CHECK(std::abs(mi_direct(sol, ch, cfg, k, d) - o.direct) < 1e-8);
        CHECK(std::abs(mi_conditional(sol, ch, cfg, k, d) - o.conditional) < 1e-8);
      }
    }
  }
}

TEST_CASE("rates are nonnegative on feasible solutions") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const ChannelSet ch = sample_channels(cfg, 3000 + rep);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      for (int d = 0; d < cfg.delayCount(); ++d) {
        CHECK(mi_direct(sol, ch, cfg, k, d) >= -1e-9);
        CHECK(mi_conditional(sol, ch, cfg, k, d) >= -1e-9);
        CHECK(rate_f(sol, ch, cfg, k, d) >= -1e-9);
      }
    }
  }
}

TEST_CASE("chain rule at zero worst-case delay") {
  std::mt19937_64 rng(47);
  for (int rep = 0; rep < 20; ++rep) {
    SystemConfig cfg = tu::random_config(rng, 2, 2, 0);
    const ChannelSet ch = sample_channels(cfg, 4000 + rep);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      const CMat joint = oracle_joint_covariance(sol, ch, cfg, k, 0);
      const int n1 = cfg.antennasRrh1;
      const int n2 = cfg.antennasRrh2;
      const auto vx = tu::index_range(0, n1 + n2);
      const auto y = tu::index_range(n1 + n2, cfg.antennasUe[k]);
      const double chain = mi_gaussian_oracle(joint, vx, y);
      CHECK(std::abs(rate_f(sol, ch, cfg, k, 0) - chain) < 1e-9);
    }
  }
}

TEST_CASE("phase offset cannot matter without cross terms") {
  std::mt19937_64 rng(53);
  SystemConfig cfg = tu::scalar_config(2, 1, 4.0, 4.0);
  const ChannelSet ch = sample_channels(cfg, 71);
  PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
  for (int k = 0; k < cfg.numUes; ++k)
    for (int d = 0; d < cfg.delayCount(); ++d) sol.crossCorr[k][d].setZero();
  const RateReport base = worst_case_rates(sol, ch, cfg);
  for (double theta : {0.3, 1.2, 2.9}) {
    const RateReport rot = worst_case_rates(sol, apply_phase_offset(ch, theta), cfg);
    CHECK(std::abs(rot.minRate - base.minRate) < 1e-9);
    for (int k = 0; k < cfg.numUes; ++k)
      CHECK(std::abs(rot.perUe[k] - base.perUe[k]) < 1e-9);
  }
}

TEST_CASE("uniform shrinking never raises the worst-case rate") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const ChannelSet ch = sample_channels(cfg, 5000 + rep);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    double prev = worst_case_rates(sol, ch, cfg).minRate;
    for (double alpha : {0.8, 0.5, 0.2}) {
      const double shrunk = worst_case_rates(sol.scaled(alpha), ch, cfg).minRate;
      CHECK(shrunk <= prev + 1e-9);
      prev = shrunk;
    }
  }
}
