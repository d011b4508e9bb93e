// SPDX-License-Identifier: Apache-2.0
#include "racoop/linalg.hpp"

#include <cmath>

namespace racoop {

CMat hermitize(const CMat& x) { return 0.5 * (x + x.adjoint()); }

std::optional<double> try_logdet2_hpd(const CMat& x) {
  Eigen::LLT<CMat> llt(x);
  if (llt.info() != Eigen::Success) return std::nullopt;
  double ld = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = std::real(l(i, i));
    if (!(d > 0.0)) return std::nullopt;
    ld += std::log2(d);
  }
  return 2.0 * ld;
}

double logdet2_psd(const CMat& x) {
  if (auto ld = try_logdet2_hpd(x)) return *ld;
  Eigen::SelfAdjointEigenSolver<CMat> es(x, Eigen::EigenvaluesOnly);
  double ld = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    ld += std::log2(std::max(es.eigenvalues()[i], 1e-300));
  }
  return ld;
}

PsdPinv pinv_psd(const CMat& x, double relTol) {
  Eigen::SelfAdjointEigenSolver<CMat> es(x);
  const RVec& ev = es.eigenvalues();
  const double cutoff = relTol * std::max(0.0, ev.size() ? ev.maxCoeff() : 0.0);
  PsdPinv out;
  out.pinv = CMat::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) {
      out.pinv.noalias() +=
          (1.0 / ev[i]) * es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
      out.logdet2Nonzero += std::log2(ev[i]);
      ++out.rank;
    }
  }
  return out;
}

double min_eig_hermitian(const CMat& x) {
  if (x.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double pseudo_logdet2(const CMat& x, double relTol) {
  Eigen::SelfAdjointEigenSolver<CMat> es(x, Eigen::EigenvaluesOnly);
  const RVec& ev = es.eigenvalues();
  const double cutoff = relTol * std::max(0.0, ev.size() ? ev.maxCoeff() : 0.0);
  double ld = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) ld += std::log2(ev[i]);
  }
  return ld;
}

CMat submatrix(const CMat& x, const std::vector<int>& idx) {
  CMat out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = x(idx[r], idx[c]);
  }
  return out;
}

}  // namespace racoop
