// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "racoop/model.hpp"
#include "testutil.hpp"

using namespace racoop;
namespace tu = racoop::testutil;

TEST_CASE("channel sampling is deterministic in the seed") {
  SystemConfig cfg = tu::scalar_config(2, 1, 2.0, 2.0);
  cfg.antennasRrh1 = 2;
  cfg.antennasUe = {2, 1};
  const ChannelSet a = sample_channels(cfg, 7);
  const ChannelSet b = sample_channels(cfg, 7);
  for (int k = 0; k < cfg.numUes; ++k) {
    for (int j = 0; j < 2; ++j) {
      REQUIRE(a.of(k, j).rows() == b.of(k, j).rows());
      CHECK((a.of(k, j) - b.of(k, j)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  const ChannelSet c = sample_channels(cfg, 8);
  CHECK((a.of(0, 0) - c.of(0, 0)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sampled channel power concentrates at unit variance") {
  // 1e5 scalar entries: mean |h|^2 within [0.98, 1.02].
  SystemConfig cfg;
  cfg.numUes = 1;
  cfg.antennasRrh1 = 250;
  cfg.antennasRrh2 = 250;
  cfg.antennasUe = {200};
  const ChannelSet ch = sample_channels(cfg, 123);
  double sum = 0.0;
  long count = 0;
  for (int j = 0; j < 2; ++j) {
    sum += ch.of(0, j).cwiseAbs2().sum();
    count += ch.of(0, j).size();
  }
  REQUIRE(count == 100000);
  const double mean = sum / double(count);
  CHECK(mean > 0.98);
  CHECK(mean < 1.02);
}

TEST_CASE("two scalar UEs give four scalar channels") {
  const SystemConfig cfg = tu::scalar_config(2, 0, 1.0, 1.0);
  const ChannelSet ch = sample_channels(cfg, 1);
  int scalars = 0;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      if (ch.of(k, j).rows() == 1 && ch.of(k, j).cols() == 1) ++scalars;
  CHECK(scalars == 4);
}

TEST_CASE("joint covariance assembly: direct stacking") {
  SystemConfig cfg = tu::scalar_config(1, 0, 10.0, 10.0);
  PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {1.0});
  CMat m = assemble_joint_covariance(sol, 0);
  REQUIRE(m.rows() == 2);
  CHECK(std::real(m(0, 0)) == doctest::Approx(1.0));
  CHECK(std::real(m(0, 1)) == doctest::Approx(1.0));
  CHECK(std::real(m(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("joint covariance assembly: block layout with two slots") {
  SystemConfig cfg = tu::scalar_config(1, 1, 10.0, 10.0);
  PrecoderSolution sol = tu::scalar_solution(cfg, 2.0, 3.0, {1.0, 0.0});
  CMat m = assemble_joint_covariance(sol, 0);
  REQUIRE(m.rows() == 3);
  CMat expected(3, 3);
  expected << 2, 0, 1, 0, 2, 0, 1, 0, 3;
  CHECK((m - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("joint covariance is exactly Hermitian for random solutions") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    for (int k = 0; k < cfg.numUes; ++k) {
      const CMat m = assemble_joint_covariance(sol, k);
      CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("zero cross terms make the joint covariance block diagonal") {
  SystemConfig cfg = tu::scalar_config(1, 1, 10.0, 10.0);
  cfg.antennasRrh1 = 2;
  std::mt19937_64 rng(5);
  PrecoderSolution sol = PrecoderSolution::zeros(cfg);
  const CMat a = tu::random_complex(2, 2, rng);
  sol.rrh1Cov[0] = hermitize(a * a.adjoint());
  sol.rrh2Cov[0](0, 0) = 2.0;
  CHECK(min_eig_hermitian(assemble_joint_covariance(sol, 0)) >= -1e-12);
  sol.rrh1Cov[0](0, 0) = -1.0;  // indefinite block breaks it
  CHECK(min_eig_hermitian(assemble_joint_covariance(sol, 0)) < 0.0);
}

TEST_CASE("feasibility verdicts") {
  SystemConfig cfg = tu::scalar_config(1, 0, 1.0, 1.0);

  SUBCASE("the zero solution is feasible under any budget") {
    const PrecoderSolution sol = PrecoderSolution::zeros(cfg);
    CHECK(check_feasibility(sol, cfg).feasible);
  }
  SUBCASE("overtight cross-correlation violates the PSD constraint") {
    cfg.powerRrh1 = 10.0;
    cfg.powerRrh2 = 10.0;
    const PrecoderSolution sol = tu::scalar_solution(cfg, 1.0, 1.0, {2.0});
    const FeasibilityReport rep = check_feasibility(sol, cfg);
    CHECK_FALSE(rep.feasible);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].constraint == "psd_joint_ue0");
    CHECK(rep.violations[0].magnitude > 0.0);
  }
  SUBCASE("exact budget boundary is feasible at zero tolerance") {
    SystemConfig c2 = tu::scalar_config(2, 0, 2.0, 3.0);
    PrecoderSolution sol = PrecoderSolution::zeros(c2);
    sol.rrh1Cov[0](0, 0) = 1.0;
    sol.rrh1Cov[1](0, 0) = 1.0;
    sol.rrh2Cov[0](0, 0) = 1.5;
    sol.rrh2Cov[1](0, 0) = 1.5;
    CHECK(check_feasibility(sol, c2, 0.0).feasible);
  }
  SUBCASE("power excess is reported with its magnitude") {
    const PrecoderSolution sol = tu::scalar_solution(cfg, 2.0, 0.5, {0.0});
    const FeasibilityReport rep = check_feasibility(sol, cfg);
    CHECK_FALSE(rep.feasible);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].constraint == "power_rrh1");
    CHECK(rep.violations[0].magnitude == doctest::Approx(1.0));
  }
}

TEST_CASE("feasible solutions have PSD per-delay sub-blocks") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const SystemConfig cfg = tu::random_config(rng);
    const PrecoderSolution sol = tu::random_feasible_solution(cfg, rng);
    REQUIRE(check_feasibility(sol, cfg).feasible);
    const int n1 = cfg.antennasRrh1;
    const int n2 = cfg.antennasRrh2;
    for (int k = 0; k < cfg.numUes; ++k) {
      for (int d = 0; d < cfg.delayCount(); ++d) {
        CMat sub(n1 + n2, n1 + n2);
        sub.topLeftCorner(n1, n1) = sol.rrh1Cov[k];
        sub.topRightCorner(n1, n2) = sol.crossCorr[k][d];
        sub.bottomLeftCorner(n2, n1) = sol.crossCorr[k][d].adjoint();
        sub.bottomRightCorner(n2, n2) = sol.rrh2Cov[k];
        CHECK(min_eig_hermitian(sub) >= -1e-9);
      }
    }
  }
}

TEST_CASE("phase offset rotation") {
  SystemConfig cfg = tu::scalar_config(1, 0, 1.0, 1.0);
  const ChannelSet ch = tu::unit_channels(cfg);

  SUBCASE("zero angle is the identity") {
    const ChannelSet r = apply_phase_offset(ch, 0.0);
    CHECK((r.of(0, 0) - ch.of(0, 0)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("pi flips the sign of the RRH-1 channel only") {
    const ChannelSet r = apply_phase_offset(ch, 3.14159265358979323846);
    CHECK(std::real(r.of(0, 0)(0, 0)) == doctest::Approx(-1.0));
    CHECK(std::abs(std::imag(r.of(0, 0)(0, 0))) < 1e-12);
    CHECK(std::real(r.of(0, 1)(0, 0)) == doctest::Approx(1.0));
  }
  SUBCASE("two quarter turns equal a half turn") {
    const double pi = 3.14159265358979323846;
    const ChannelSet twice = apply_phase_offset(apply_phase_offset(ch, pi / 2), pi / 2);
    const ChannelSet once = apply_phase_offset(ch, pi);
    CHECK((twice.of(0, 0) - once.of(0, 0)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("magnitudes are preserved") {
    std::mt19937_64 rng(3);
    SystemConfig big = tu::scalar_config(2, 1, 1.0, 1.0);
    big.antennasRrh1 = 2;
    big.antennasUe = {2, 1};
    const ChannelSet base = sample_channels(big, 17);
    const ChannelSet rot = apply_phase_offset(base, 0.7391);
    for (int k = 0; k < big.numUes; ++k) {
      CHECK((rot.of(k, 0).cwiseAbs() - base.of(k, 0).cwiseAbs()).maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("config validation rejects malformed instances") {
  SystemConfig cfg = tu::scalar_config(2, 1, 1.0, 1.0);
  CHECK_NOTHROW(cfg.validate());
  cfg.antennasUe = {1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tu::scalar_config(1, -1, 1.0, 1.0);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tu::scalar_config(1, 0, -0.5, 1.0);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
