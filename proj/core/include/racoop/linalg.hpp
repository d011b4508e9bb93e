// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

namespace racoop {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kLog2e = 1.4426950408889634074;  // 1/ln(2)

/// (X + X^H)/2. All covariance assembly goes through this so stored
/// matrices are Hermitian to the last bit.
CMat hermitize(const CMat& x);

/// log2 det of a Hermitian positive definite matrix via Cholesky.
/// Returns nullopt if the factorization fails (matrix not PD).
std::optional<double> try_logdet2_hpd(const CMat& x);

/// log2 det of a Hermitian PD matrix; falls back to an eigenvalue sum
/// (clamping tiny negatives) when Cholesky fails near the boundary.
double logdet2_psd(const CMat& x);

/// Eigenvalue-thresholded pseudo-inverse of a Hermitian PSD matrix.
/// Eigenvalues below relTol * max(eig, 0) are treated as exact zeros.
struct PsdPinv {
  CMat pinv;
  int rank = 0;
  double logdet2Nonzero = 0.0;  // log2 of the product of retained eigenvalues
};
PsdPinv pinv_psd(const CMat& x, double relTol = 1e-10);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eig_hermitian(const CMat& x);

/// log2 pseudo-determinant (product of eigenvalues above relTol * maxEig).
double pseudo_logdet2(const CMat& x, double relTol = 1e-10);

/// Extract the principal submatrix with the given row/column indices.
CMat submatrix(const CMat& x, const std::vector<int>& idx);

}  // namespace racoop
