// SPDX-License-Identifier: Apache-2.0
#include "racoop/detmax.hpp"

#include <cmath>
#include <limits>

namespace racoop {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double ln_from_log2(double x) { return x / kLog2e; }
}  // namespace

void AffineHermitianMatrix::add(int param, const CMat& g) {
  for (std::size_t i = 0; i < paramIndex.size(); ++i) {
    if (paramIndex[i] == param) {
      coeff[i] += g;
      return;
    }
  }
  paramIndex.push_back(param);
  coeff.push_back(g);
}

CMat AffineHermitianMatrix::eval(const RVec& z) const {
  CMat x = constant;
  for (std::size_t i = 0; i < paramIndex.size(); ++i) x += z[paramIndex[i]] * coeff[i];
  return x;
}

AffineHermitianMatrix AffineHermitianMatrix::reduced(const RMat& sel) const {
  AffineHermitianMatrix out(static_cast<int>(sel.rows()));
  const CMat selc = sel.cast<Cplx>();
  out.constant = selc * constant * selc.adjoint();
  out.paramIndex = paramIndex;
  out.coeff.reserve(coeff.size());
  for (const CMat& g : coeff) out.coeff.push_back(selc * g * selc.adjoint());
  return out;
}

void ScalarConstraint::addLinear(int param, double coef) {
  for (std::size_t i = 0; i < linIndex.size(); ++i) {
    if (linIndex[i] == param) {
      linCoef[i] += coef;
      return;
    }
  }
  linIndex.push_back(param);
  linCoef.push_back(coef);
}

double ScalarConstraint::value(const RVec& z) const {
  double r = constant;
  for (std::size_t i = 0; i < linIndex.size(); ++i) r += linCoef[i] * z[linIndex[i]];
  for (std::size_t m = 0; m < ldMat.size(); ++m) {
    const auto ld = try_logdet2_hpd(ldMat[m].eval(z));
    if (!ld) return -kInf;
    r += ldWeight[m] * (*ld);
  }
  return r;
}

double DetMaxProblem::barrierComplexity() const {
  double nu = 0.0;
  for (const auto& sc : scalars) {
    nu += 1.0;
    for (const auto& m : sc.ldMat) nu += m.dim;
  }
  for (const auto& c : cones) nu += c.dim;
  return nu;
}

double DetMaxProblem::objective(const RVec& z) const {
  double v = 0.0;
  for (std::size_t i = 0; i < objIndex.size(); ++i) v += objCoef[i] * z[objIndex[i]];
  return v;
}

namespace {

/// Barrier value at z, +inf when infeasible. psi = -eta*obj + barrier.
double barrier_value(const DetMaxProblem& p, const RVec& z) {
  double phi = 0.0;
  for (const auto& sc : p.scalars) {
    double r = sc.constant;
    for (std::size_t i = 0; i < sc.linIndex.size(); ++i)
      r += sc.linCoef[i] * z[sc.linIndex[i]];
    double aux = 0.0;
    for (std::size_t m = 0; m < sc.ldMat.size(); ++m) {
      const auto ld = try_logdet2_hpd(sc.ldMat[m].eval(z));
      if (!ld) return kInf;
      r += sc.ldWeight[m] * (*ld);
      aux -= ln_from_log2(*ld);
    }
    if (!(r > 0.0)) return kInf;
    phi += -std::log(r) + aux;
  }
  for (const auto& c : p.cones) {
    const auto ld = try_logdet2_hpd(c.eval(z));
    if (!ld) return kInf;
    phi -= ln_from_log2(*ld);
  }
  return phi;
}

/// Gradient/Hessian of one log-det matrix term at a point: per involved
/// parameter the trace t_i = Re tr(X^-1 G_i) and the pairwise matrix
/// T_ij = Re tr(X^-1 G_i X^-1 G_j).
struct MatrixDerivs {
  bool ok = false;
  double logdet2 = 0.0;
  RVec traces;
  RMat pairTraces;
};

MatrixDerivs matrix_derivs(const AffineHermitianMatrix& m, const RVec& z) {
  MatrixDerivs out;
  const CMat x = m.eval(z);
  Eigen::LLT<CMat> llt(x);
  if (llt.info() != Eigen::Success) return out;
  double ld = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double d = std::real(llt.matrixLLT()(i, i));
    if (!(d > 0.0)) return out;
    ld += std::log2(d);
  }
  out.logdet2 = 2.0 * ld;

  const int np = static_cast<int>(m.paramIndex.size());
  std::vector<CMat> k(np);
  out.traces.resize(np);
  for (int i = 0; i < np; ++i) {
    k[i] = llt.solve(m.coeff[i]);
    out.traces[i] = std::real(k[i].trace());
  }
  out.pairTraces.resize(np, np);
  for (int i = 0; i < np; ++i) {
    for (int j = i; j < np; ++j) {
      const double t =
          std::real((k[i].array() * k[j].transpose().array()).sum());
      out.pairTraces(i, j) = t;
      out.pairTraces(j, i) = t;
    }
  }
  out.ok = true;
  return out;
}

struct FullEval {
  bool feasible = false;
  double psi = 0.0;
  RVec grad;
  RMat hess;
};

FullEval eval_full(const DetMaxProblem& p, const RVec& z, double eta) {
  FullEval out;
  const int n = p.numParams;
  out.grad = RVec::Zero(n);
  out.hess = RMat::Zero(n, n);
  double phi = 0.0;

  for (const auto& sc : p.scalars) {
    double r = sc.constant;
    for (std::size_t i = 0; i < sc.linIndex.size(); ++i)
      r += sc.linCoef[i] * z[sc.linIndex[i]];

    std::vector<MatrixDerivs> derivs(sc.ldMat.size());
    double aux = 0.0;
    for (std::size_t m = 0; m < sc.ldMat.size(); ++m) {
      derivs[m] = matrix_derivs(sc.ldMat[m], z);
      if (!derivs[m].ok) return out;
      r += sc.ldWeight[m] * derivs[m].logdet2;
      aux -= ln_from_log2(derivs[m].logdet2);
    }
    if (!(r > 0.0)) return out;
    phi += -std::log(r) + aux;

    // gr = dr/dz restricted to involved parameters.
    RVec gr = RVec::Zero(n);
    for (std::size_t i = 0; i < sc.linIndex.size(); ++i)
      gr[sc.linIndex[i]] += sc.linCoef[i];
    for (std::size_t m = 0; m < sc.ldMat.size(); ++m) {
      const auto& idx = sc.ldMat[m].paramIndex;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        gr[idx[i]] += sc.ldWeight[m] * kLog2e * derivs[m].traces[i];
        out.grad[idx[i]] -= derivs[m].traces[i];  // aux -ln det term
      }
    }
    out.grad -= gr / r;
    out.hess += (gr * gr.transpose()) / (r * r);
    for (std::size_t m = 0; m < sc.ldMat.size(); ++m) {
      const auto& idx = sc.ldMat[m].paramIndex;
      const double scale = sc.ldWeight[m] * kLog2e / r + 1.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
          out.hess(idx[i], idx[j]) += scale * derivs[m].pairTraces(i, j);
        }
      }
    }
  }

  for (const auto& c : p.cones) {
    const MatrixDerivs d = matrix_derivs(c, z);
    if (!d.ok) return out;
    phi -= ln_from_log2(d.logdet2);
    for (std::size_t i = 0; i < c.paramIndex.size(); ++i) {
      out.grad[c.paramIndex[i]] -= d.traces[i];
      for (std::size_t j = 0; j < c.paramIndex.size(); ++j) {
        out.hess(c.paramIndex[i], c.paramIndex[j]) += d.pairTraces(i, j);
      }
    }
  }

  for (std::size_t i = 0; i < p.objIndex.size(); ++i) {
    out.grad[p.objIndex[i]] -= eta * p.objCoef[i];
  }
  out.psi = -eta * p.objective(z) + phi;
  out.feasible = true;
  return out;
}

}  // namespace

DetMaxResult detmax_maximize(const DetMaxProblem& problem, const RVec& start,
                             const DetMaxOptions& opts) {
  DetMaxResult res;
  res.z = start;
  const double nu = problem.barrierComplexity();

  if (problem.numParams == 0 || nu == 0.0) {
    res.objective = problem.objective(res.z);
    res.gap = 0.0;
    return res;
  }

  double eta = opts.etaStart;
  bool failed = false;
  bool stalled = false;
  int stagesDone = 0;

  while (true) {
    // Centering at the current eta.
    for (int it = 0; it < opts.maxNewtonPerStage; ++it) {
      if (res.newtonSteps >= opts.maxNewtonTotal) {
        res.status = DetMaxStatus::MaxIter;
        res.objective = problem.objective(res.z);
        res.gap = nu / eta;
        return res;
      }
      FullEval ev = eval_full(problem, res.z, eta);
      if (!ev.feasible) {
        failed = true;
        break;
      }

      // Newton direction with escalating ridge on factorization trouble.
      RVec step;
      double ridge = 0.0;
      for (;;) {
        RMat h = ev.hess;
        if (ridge > 0.0) h.diagonal().array() += ridge;
        Eigen::LDLT<RMat> ldlt(h);
        step = -ldlt.solve(ev.grad);
        if (ldlt.info() == Eigen::Success && step.allFinite() &&
            ev.grad.dot(step) <= 0.0)
          break;
        ridge = (ridge == 0.0) ? 1e-12 * (1.0 + ev.hess.diagonal().maxCoeff())
                               : ridge * 100.0;
        if (ridge > 1e8) {
          failed = true;
          break;
        }
      }
      if (failed) break;

      const double decrement2 = -ev.grad.dot(step);
      // Intermediate stages only need rough centering; the certificate is
      // taken from the last stage, which is polished to centeringTol.
      const bool lastStage = nu / eta <= opts.gapAbs;
      const double stageTol = lastStage ? opts.centeringTol : 1e-4;
      if (decrement2 / 2.0 <= stageTol) break;

      double alpha = 1.0;
      bool stepped = false;
      while (alpha >= 1e-14) {
        const RVec cand = res.z + alpha * step;
        const double phi = barrier_value(problem, cand);
        if (std::isfinite(phi)) {
          const double psi = -eta * problem.objective(cand) + phi;
          if (psi <= ev.psi - 0.25 * alpha * decrement2) {
            res.z = cand;
            stepped = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      ++res.newtonSteps;
      if (!stepped) {
        // No feasible decrease: treat as centered if nearly stationary,
        // otherwise give up on this stage.
        if (decrement2 / 2.0 > 1e-4) stalled = true;
        break;
      }
    }

    if (failed || stalled) break;
    ++stagesDone;
    if (nu / eta <= opts.gapAbs) break;
    eta *= opts.etaFactor;
  }

  res.objective = problem.objective(res.z);
  res.gap = nu / eta;
  if (failed || (stalled && stagesDone == 0)) {
    res.status = DetMaxStatus::NumericalFailure;
  } else if (stalled) {
    // The iterate is strictly feasible but the last stage never centered;
    // report it as a truncated run rather than a certified optimum.
    res.status = DetMaxStatus::MaxIter;
  } else {
    res.status = DetMaxStatus::Optimal;
  }
  return res;
}

}  // namespace racoop
