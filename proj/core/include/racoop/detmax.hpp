// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "racoop/linalg.hpp"

namespace racoop {

/// Hermitian-matrix-valued affine function X(z) = constant + sum z_i coeff_i
/// over a shared real parameter vector. Coefficients are Hermitian, so every
/// X(z) is Hermitian by construction.
struct AffineHermitianMatrix {
  int dim = 0;
  CMat constant;
  std::vector<int> paramIndex;
  std::vector<CMat> coeff;

  explicit AffineHermitianMatrix(int n = 0)
      : dim(n), constant(CMat::Zero(n, n)) {}

  /// Accumulates a derivative block for a parameter (merges repeats).
  void add(int param, const CMat& g);
  CMat eval(const RVec& z) const;
  /// sel * X * sel^T restricted to the selector's rows (0/1 selectors).
  AffineHermitianMatrix reduced(const RMat& sel) const;
};

/// r(z) = constant + lin.z + sum_m weight_m log2 det X_m(z) >= 0.
/// Pure affine constraints have no log-det terms. The barrier used is
/// -ln r - sum_m ln det X_m (the extra terms keep the arguments PD and make
/// the composite self-concordant).
struct ScalarConstraint {
  double constant = 0.0;
  std::vector<int> linIndex;
  std::vector<double> linCoef;
  std::vector<double> ldWeight;
  std::vector<AffineHermitianMatrix> ldMat;

  void addLinear(int param, double coef);
  double value(const RVec& z) const;  // -inf when some X_m is not PD
};

/// maximize obj.z subject to scalar constraints and PSD cones X(z) >= 0.
struct DetMaxProblem {
  int numParams = 0;
  std::vector<int> objIndex;
  std::vector<double> objCoef;
  std::vector<ScalarConstraint> scalars;
  std::vector<AffineHermitianMatrix> cones;

  double barrierComplexity() const;  // nu of the composite barrier
  double objective(const RVec& z) const;
};

struct DetMaxOptions {
  double gapAbs = 1e-9;        // stop when nu/eta <= gapAbs
  double etaStart = 1.0;
  double etaFactor = 10.0;
  double centeringTol = 1e-10; // Newton decrement^2 / 2 per stage
  int maxNewtonPerStage = 80;
  int maxNewtonTotal = 4000;
};

enum class DetMaxStatus { Optimal, MaxIter, NumericalFailure };

struct DetMaxResult {
  RVec z;
  double objective = 0.0;
  double gap = 0.0;
  int newtonSteps = 0;
  DetMaxStatus status = DetMaxStatus::Optimal;
};

/// Log-barrier path following with damped Newton centering. `start` must be
/// strictly feasible (all r_i > 0, all cones PD); callers construct it.
DetMaxResult detmax_maximize(const DetMaxProblem& problem, const RVec& start,
                             const DetMaxOptions& opts = {});

}  // namespace racoop
