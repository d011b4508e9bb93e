// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "racoop/surrogate.hpp"
#include "testutil.hpp"

using namespace racoop;
namespace tu = racoop::testutil;

namespace {

constexpr double kLn2 = 0.6931471805599453;

/// Hand-rolled scalar surrogate for the single-UE, D=0, unit-channel,
/// zero-cross-correlation case: 2x2 and 3x3 cofactor inverses only, no
/// shared code with the production path.
double hand_surrogate_scalar(double v, double s, double v0, double s0) {
  const double c = 1.0 + v + s;
  const double c0 = 1.0 + v0 + s0;
  // A = [[V, V], [V, c]], B = [[S, S, 0], [S, c, V], [0, V, V]].
  const double detA0 = v0 * c0 - v0 * v0;
  // inv(A0) = 1/det * [[c0, -v0], [-v0, v0]]
  const double trA = (c0 * v + v0 * c - 2.0 * v0 * v) / detA0;
  const double phiA = std::log2(detA0) + (trA - 2.0) / kLn2;

  const double detB0 = s0 * v0 * (c0 - v0 - s0);  // = s0 * v0 here
  // Cofactor inverse of B0 (symmetric).
  const double i00 = (c0 * v0 - v0 * v0) / detB0;
  const double i01 = -(s0 * v0) / detB0;
  const double i02 = (s0 * v0) / detB0;
  const double i11 = (s0 * v0) / detB0;
  const double i12 = -(s0 * v0) / detB0;
  const double i22 = (s0 * c0 - s0 * s0) / detB0;
  // Sol matrix B = [[s, s, 0], [s, c, v], [0, v, v]]; its (0,2) entry is 0.
  const double trB = i00 * s + 2.0 * i01 * s + i11 * c + 2.0 * i12 * v + i22 * v;
  const double phiB = std::log2(detB0) + (trB - 3.0) / kLn2;

  const double concave =
      std::log2(c) + std::log2(v * (c - v)) + std::log2(s * v);
  return concave - phiA - phiB;
}

}  // namespace

TEST_CASE("phi formula") {
  SUBCASE("tangency: phi(A, A) = log2 det A") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
      const CMat a = tu::random_complex(3, 3, rng);
      const CMat pd = hermitize(a * a.adjoint()) + 0.1 * CMat::Identity(3, 3);
      CHECK(phi(pd, pd) == doctest::Approx(logdet2_psd(pd)).epsilon(1e-12));
    }
  }
  SUBCASE("scalar values upper-bound the log") {
    CMat two(1, 1), one(1, 1);
    two(0, 0) = 2.0;
    one(0, 0) = 1.0;
    const double p21 = phi(two, one);
    CHECK(p21 == doctest::Approx(1.0 / kLn2).epsilon(1e-12));  // ~1.4427
    CHECK(p21 >= std::log2(2.0));
    const double p12 = phi(one, two);
    CHECK(p12 == doctest::Approx(1.0 - 0.5 / kLn2).epsilon(1e-12));  // ~0.2787
    CHECK(p12 >= 0.0);
  }
}

TEST_CASE("surrogate is tangent at the anchor") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const ChannelSet ch = sample_channels(cfg, 900 + rep);
    const PrecoderSolution point = tu::random_feasible_solution(cfg, rng);
    const Anchor anchor = build_anchor(point, ch, cfg);
    for (int k = 0; k < cfg.numUes; ++k) {
      for (int d = 0; d < cfg.delayCount(); ++d) {
        const double st = surrogate_rate(point, anchor, ch, k, d);
        const double f = rate_f(point, ch, cfg, k, d);
        CHECK(std::abs(st - f) < 1e-9);
      }
    }
  }
}

TEST_CASE("surrogate minorizes the true rate") {
  std::mt19937_64 rng(13);
  int pairs = 0;
  while (pairs < 150) {
    const SystemConfig cfg = tu::random_config(rng);
    const ChannelSet ch = sample_channels(cfg, 1700 + pairs);
    const PrecoderSolution anchorPoint = tu::random_feasible_solution(cfg, rng);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    const Anchor anchor = build_anchor(anchorPoint, ch, cfg);
    for (int k = 0; k < cfg.numUes; ++k) {
      for (int d = 0; d < cfg.delayCount(); ++d) {
        CHECK(surrogate_rate(sol, anchor, ch, k, d) <=
              rate_f(sol, ch, cfg, k, d) + 1e-9);
      }
    }
    ++pairs;
  }
}

TEST_CASE("surrogate is concave along feasible segments") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 15; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const ChannelSet ch = sample_channels(cfg, 2600 + rep);
    const PrecoderSolution anchorPoint = tu::random_feasible_solution(cfg, rng);
    const Anchor anchor = build_anchor(anchorPoint, ch, cfg);
    const PrecoderSolution s1 = tu::random_feasible_solution(cfg, rng);
    const PrecoderSolution s2 = tu::random_feasible_solution(cfg, rng);
    auto blend = [&](double lam) {
      PrecoderSolution out = s1.scaled(lam);
      const PrecoderSolution other = s2.scaled(1.0 - lam);
      for (int k = 0; k < cfg.numUes; ++k) {
        out.rrh1Cov[k] += other.rrh1Cov[k];
        out.rrh2Cov[k] += other.rrh2Cov[k];
        for (int d = 0; d < cfg.delayCount(); ++d)
          out.crossCorr[k][d] += other.crossCorr[k][d];
      }
      return out;
    };
    for (double lam : {0.25, 0.5, 0.75}) {
      const PrecoderSolution mid = blend(lam);
      for (int k = 0; k < cfg.numUes; ++k) {
        for (int d = 0; d < cfg.delayCount(); ++d) {
          const double fm = surrogate_rate(mid, anchor, ch, k, d);
          const double f1 = surrogate_rate(s1, anchor, ch, k, d);
          const double f2 = surrogate_rate(s2, anchor, ch, k, d);
          CHECK(fm >= lam * f1 + (1.0 - lam) * f2 - 1e-8);
        }
      }
    }
  }
}

TEST_CASE("scalar hand expansion matches the surrogate") {
  SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
  const ChannelSet ch = tu::unit_channels(cfg);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.2, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double v0 = unif(rng), s0 = unif(rng);
    const double v = unif(rng), s = unif(rng);
    const PrecoderSolution anchorPoint = tu::scalar_solution(cfg, v0, s0, {0.0});
    const PrecoderSolution sol = tu::scalar_solution(cfg, v, s, {0.0});
    const Anchor anchor = build_anchor(anchorPoint, ch, cfg);
    const double got = surrogate_rate(sol, anchor, ch, 0, 0);
    const double want = hand_surrogate_scalar(v, s, v0, s0);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("reduced forms are tangent minorants on masked solutions") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 10; ++rep) {
    SystemConfig cfg = tu::random_config(rng, 2, 2, 1);
    const ChannelSet ch = sample_channels(cfg, 3500 + rep);

    // RRH-2 only: V and cross terms identically zero.
    PrecoderSolution p2 = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      p2.rrh1Cov[k].setZero();
      for (int d = 0; d < cfg.delayCount(); ++d) p2.crossCorr[k][d].setZero();
    }
    PrecoderSolution q2 = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      q2.rrh1Cov[k].setZero();
      for (int d = 0; d < cfg.delayCount(); ++d) q2.crossCorr[k][d].setZero();
    }
    const Anchor a2 = build_anchor(p2, ch, cfg, RateForm::Rrh2Only, {0});
    for (int k = 0; k < cfg.numUes; ++k) {
      CHECK(std::abs(surrogate_rate(p2, a2, ch, k, 0) - rate_f(p2, ch, cfg, k, 0)) <
            1e-9);
      CHECK(surrogate_rate(q2, a2, ch, k, 0) <= rate_f(q2, ch, cfg, k, 0) + 1e-9);
    }

    // RRH-1 only: Sigma and cross terms identically zero.
    PrecoderSolution p1 = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      p1.rrh2Cov[k].setZero();
      for (int d = 0; d < cfg.delayCount(); ++d) p1.crossCorr[k][d].setZero();
    }
    PrecoderSolution q1 = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      q1.rrh2Cov[k].setZero();
      for (int d = 0; d < cfg.delayCount(); ++d) q1.crossCorr[k][d].setZero();
    }
    const Anchor a1 = build_anchor(p1, ch, cfg, RateForm::Rrh1Only, {0});
    for (int k = 0; k < cfg.numUes; ++k) {
      CHECK(std::abs(surrogate_rate(p1, a1, ch, k, 0) - rate_f(p1, ch, cfg, k, 0)) <
            1e-9);
      CHECK(surrogate_rate(q1, a1, ch, k, 0) <= rate_f(q1, ch, cfg, k, 0) + 1e-9);
    }
  }
}

TEST_CASE("infeasible anchors are rejected") {
  SystemConfig cfg = tu::scalar_config(1, 0, 1.0, 1.0);
  const ChannelSet ch = tu::unit_channels(cfg);
  const PrecoderSolution bad = tu::scalar_solution(cfg, 4.0, 0.5, {0.0});
  CHECK_THROWS_AS(build_anchor(bad, ch, cfg), std::invalid_argument);
}
