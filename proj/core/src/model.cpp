// SPDX-License-Identifier: Apache-2.0
#include "racoop/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace racoop {

void SystemConfig::validate() const {
  if (numUes < 1) throw std::invalid_argument("numUes must be >= 1");
  if (antennasRrh1 < 1 || antennasRrh2 < 1)
    throw std::invalid_argument("RRH antenna counts must be >= 1");
  if (static_cast<int>(antennasUe.size()) != numUes)
    throw std::invalid_argument("antennasUe must have one entry per UE");
  for (int n : antennasUe)
    if (n < 1) throw std::invalid_argument("UE antenna counts must be >= 1");
  if (worstCaseDelay < 0) throw std::invalid_argument("worstCaseDelay must be >= 0");
  if (powerRrh1 < 0.0 || powerRrh2 < 0.0)
    throw std::invalid_argument("powers must be >= 0");
}

ChannelSet sample_channels(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
  ChannelSet out;
  out.h.resize(config.numUes);
  const int nr[2] = {config.antennasRrh1, config.antennasRrh2};
  for (int k = 0; k < config.numUes; ++k) {
    for (int j = 0; j < 2; ++j) {
      CMat m(config.antennasUe[k], nr[j]);
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          const double re = gauss(rng);
          const double im = gauss(rng);
          m(r, c) = Cplx(re, im);
        }
      }
      out.h[k][j] = std::move(m);
    }
  }
  return out;
}

ChannelSet apply_phase_offset(const ChannelSet& channels, double theta) {
  ChannelSet out = channels;
  const Cplx rot = std::exp(Cplx(0.0, theta));
  for (auto& pair : out.h) pair[0] *= rot;
  return out;
}

PrecoderSolution PrecoderSolution::zeros(const SystemConfig& config) {
  PrecoderSolution sol;
  sol.rrh1Cov.assign(config.numUes,
                     CMat::Zero(config.antennasRrh1, config.antennasRrh1));
  sol.rrh2Cov.assign(config.numUes,
                     CMat::Zero(config.antennasRrh2, config.antennasRrh2));
  sol.crossCorr.assign(
      config.numUes,
      std::vector<CMat>(config.delayCount(),
                        CMat::Zero(config.antennasRrh1, config.antennasRrh2)));
  return sol;
}

PrecoderSolution PrecoderSolution::scaled(double factor) const {
  PrecoderSolution out = *this;
  for (auto& m : out.rrh1Cov) m *= factor;
  for (auto& m : out.rrh2Cov) m *= factor;
  for (auto& row : out.crossCorr)
    for (auto& m : row) m *= factor;
  return out;
}

CMat assemble_joint_covariance(const PrecoderSolution& sol, int ue) {
  const CMat& v = sol.rrh1Cov[ue];
  const CMat& s = sol.rrh2Cov[ue];
  const auto& cross = sol.crossCorr[ue];
  const int n1 = static_cast<int>(v.rows());
  const int n2 = static_cast<int>(s.rows());
  const int slots = static_cast<int>(cross.size());
  for (const CMat& w : cross) {
    if (w.rows() != n1 || w.cols() != n2)
      throw std::invalid_argument("cross-correlation block shape mismatch");
  }
  const int dim = slots * n1 + n2;
  CMat joint = CMat::Zero(dim, dim);
  for (int d = 0; d < slots; ++d) {
    joint.block(d * n1, d * n1, n1, n1) = v;
    joint.block(d * n1, slots * n1, n1, n2) = cross[d];
    joint.block(slots * n1, d * n1, n2, n1) = cross[d].adjoint();
  }
  joint.block(slots * n1, slots * n1, n2, n2) = s;
  return hermitize(joint);
}

FeasibilityReport check_feasibility(const PrecoderSolution& sol,
                                    const SystemConfig& config, double tol) {
  FeasibilityReport report;
  auto flag = [&](const std::string& name, double magnitude) {
    report.feasible = false;
    report.violations.push_back({name, magnitude});
  };

  double tr1 = 0.0, tr2 = 0.0;
  for (int k = 0; k < config.numUes; ++k) {
    tr1 += std::real(sol.rrh1Cov[k].trace());
    tr2 += std::real(sol.rrh2Cov[k].trace());
  }
  if (tr1 > config.powerRrh1 + tol) flag("power_rrh1", tr1 - config.powerRrh1);
  if (tr2 > config.powerRrh2 + tol) flag("power_rrh2", tr2 - config.powerRrh2);

  for (int k = 0; k < config.numUes; ++k) {
    const double lo = min_eig_hermitian(assemble_joint_covariance(sol, k));
    if (lo < -tol) flag("psd_joint_ue" + std::to_string(k), -lo);
  }
  return report;
}

}  // namespace racoop
