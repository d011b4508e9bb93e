// SPDX-License-Identifier: Apache-2.0
#include "racoop/solver.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace racoop {

namespace {

// ---- Real parametrization of the complex variable blocks ----------------
// Hermitian n x n: n diagonal params, then (i<j) pairs as (re, im).
// General n1 x n2: entries column-major... kept row-major (a, b) as (re, im).

int herm_count(int n) { return n * n; }

CMat herm_basis(int n, int p) {
  CMat g = CMat::Zero(n, n);
  if (p < n) {
    g(p, p) = 1.0;
    return g;
  }
  int q = p - n;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (q == 0) {
        g(i, j) = 1.0;
        g(j, i) = 1.0;
        return g;
      }
      if (q == 1) {
        g(i, j) = Cplx(0.0, 1.0);
        g(j, i) = Cplx(0.0, -1.0);
        return g;
      }
      q -= 2;
    }
  }
  throw std::logic_error("hermitian basis index out of range");
}

void herm_pack(const CMat& x, double* out) {
  const int n = static_cast<int>(x.rows());
  int p = 0;
  for (int i = 0; i < n; ++i) out[p++] = std::real(x(i, i));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      out[p++] = std::real(x(i, j));
      out[p++] = std::imag(x(i, j));
    }
  }
}

CMat herm_unpack(int n, const double* in) {
  CMat x = CMat::Zero(n, n);
  int p = 0;
  for (int i = 0; i < n; ++i) x(i, i) = in[p++];
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double re = in[p++];
      const double im = in[p++];
      x(i, j) = Cplx(re, im);
      x(j, i) = Cplx(re, -im);
    }
  }
  return x;
}

int cross_count(int n1, int n2) { return 2 * n1 * n2; }

CMat cross_basis(int n1, int n2, int p) {
  CMat g = CMat::Zero(n1, n2);
  const int cell = p / 2;
  const int a = cell / n2;
  const int b = cell % n2;
  g(a, b) = (p % 2 == 0) ? Cplx(1.0, 0.0) : Cplx(0.0, 1.0);
  return g;
}

void cross_pack(const CMat& x, double* out) {
  int p = 0;
  for (int a = 0; a < x.rows(); ++a) {
    for (int b = 0; b < x.cols(); ++b) {
      out[p++] = std::real(x(a, b));
      out[p++] = std::imag(x(a, b));
    }
  }
}

CMat cross_unpack(int n1, int n2, const double* in) {
  CMat x(n1, n2);
  int p = 0;
  for (int a = 0; a < n1; ++a) {
    for (int b = 0; b < n2; ++b) {
      const double re = in[p++];
      const double im = in[p++];
      x(a, b) = Cplx(re, im);
    }
  }
  return x;
}

// ---- Variable layout ------------------------------------------------------

struct UeBlock {
  int vOffset = -1;
  int sOffset = -1;
  std::vector<std::pair<int, int>> wOffsets;  // (delay, offset)
};

struct Layout {
  int n1 = 0, n2 = 0, slots = 0, numUes = 0;
  std::vector<UeBlock> ue;
  int tIndex = -1;
  int numParams = 0;

  bool vFree() const { return ue[0].vOffset >= 0; }
  bool sFree() const { return ue[0].sOffset >= 0; }
};

Layout make_layout(const SystemConfig& config, const SchemeMask& mask) {
  Layout lay;
  lay.n1 = config.antennasRrh1;
  lay.n2 = config.antennasRrh2;
  lay.slots = config.delayCount();
  lay.numUes = config.numUes;
  lay.ue.resize(config.numUes);

  std::vector<int> crossDelays;
  if (!mask.crossFrozen()) {
    crossDelays = mask.activeCrossDelays;
    if (crossDelays.empty()) {
      for (int d = 0; d < lay.slots; ++d) crossDelays.push_back(d);
    }
  }

  int off = 0;
  for (int k = 0; k < config.numUes; ++k) {
    if (!mask.rrh1Silent) {
      lay.ue[k].vOffset = off;
      off += herm_count(lay.n1);
    }
    if (!mask.rrh2Silent) {
      lay.ue[k].sOffset = off;
      off += herm_count(lay.n2);
    }
    for (int d : crossDelays) {
      lay.ue[k].wOffsets.emplace_back(d, off);
      off += cross_count(lay.n1, lay.n2);
    }
  }
  lay.tIndex = off++;
  lay.numParams = off;
  return lay;
}

RVec pack_solution(const Layout& lay, const PrecoderSolution& sol, double t) {
  RVec z = RVec::Zero(lay.numParams);
  for (int k = 0; k < lay.numUes; ++k) {
    if (lay.ue[k].vOffset >= 0) herm_pack(sol.rrh1Cov[k], z.data() + lay.ue[k].vOffset);
    if (lay.ue[k].sOffset >= 0) herm_pack(sol.rrh2Cov[k], z.data() + lay.ue[k].sOffset);
    for (auto [d, off] : lay.ue[k].wOffsets) cross_pack(sol.crossCorr[k][d], z.data() + off);
  }
  z[lay.tIndex] = t;
  return z;
}

PrecoderSolution unpack_solution(const Layout& lay, const SystemConfig& config,
                                 const RVec& z) {
  PrecoderSolution sol = PrecoderSolution::zeros(config);
  for (int k = 0; k < lay.numUes; ++k) {
    if (lay.ue[k].vOffset >= 0)
      sol.rrh1Cov[k] = hermitize(herm_unpack(lay.n1, z.data() + lay.ue[k].vOffset));
    if (lay.ue[k].sOffset >= 0)
      sol.rrh2Cov[k] = hermitize(herm_unpack(lay.n2, z.data() + lay.ue[k].sOffset));
    for (auto [d, off] : lay.ue[k].wOffsets)
      sol.crossCorr[k][d] = cross_unpack(lay.n1, lay.n2, z.data() + off);
  }
  return sol;
}

// ---- Affine constraint-matrix builders ------------------------------------

/// Cov(y_{k,d}) + I as an affine function of every UE's variables.
AffineHermitianMatrix build_rx_cov(const Layout& lay, const ChannelSet& channels,
                                   int k, int d) {
  const CMat& h1 = channels.of(k, 0);
  const CMat& h2 = channels.of(k, 1);
  const int ny = static_cast<int>(h1.rows());
  AffineHermitianMatrix m(ny);
  m.constant = CMat::Identity(ny, ny);
  for (int l = 0; l < lay.numUes; ++l) {
    const UeBlock& blk = lay.ue[l];
    if (blk.vOffset >= 0) {
      for (int p = 0; p < herm_count(lay.n1); ++p)
        m.add(blk.vOffset + p, h1 * herm_basis(lay.n1, p) * h1.adjoint());
    }
    if (blk.sOffset >= 0) {
      for (int p = 0; p < herm_count(lay.n2); ++p)
        m.add(blk.sOffset + p, h2 * herm_basis(lay.n2, p) * h2.adjoint());
    }
    for (auto [delay, off] : blk.wOffsets) {
      if (delay != d) continue;
      for (int p = 0; p < cross_count(lay.n1, lay.n2); ++p) {
        const CMat g = cross_basis(lay.n1, lay.n2, p);
        const CMat c = h1 * g * h2.adjoint();
        m.add(off + p, c + c.adjoint());
      }
    }
  }
  return m;
}

/// Cov([v_{k,d}; y_{k,d}]).
AffineHermitianMatrix build_pair_cov(const Layout& lay, const ChannelSet& channels,
                                     int k, int d) {
  const CMat& h1 = channels.of(k, 0);
  const CMat& h2 = channels.of(k, 1);
  const int ny = static_cast<int>(h1.rows());
  const int n1 = lay.n1;
  const int dim = n1 + ny;
  const AffineHermitianMatrix rx = build_rx_cov(lay, channels, k, d);

  AffineHermitianMatrix m(dim);
  m.constant.bottomRightCorner(ny, ny) = rx.constant;
  for (std::size_t i = 0; i < rx.paramIndex.size(); ++i) {
    CMat g = CMat::Zero(dim, dim);
    g.bottomRightCorner(ny, ny) = rx.coeff[i];
    m.add(rx.paramIndex[i], g);
  }
  const UeBlock& blk = lay.ue[k];
  if (blk.vOffset >= 0) {
    for (int p = 0; p < herm_count(n1); ++p) {
      const CMat e = herm_basis(n1, p);
      CMat g = CMat::Zero(dim, dim);
      g.topLeftCorner(n1, n1) = e;
      g.topRightCorner(n1, ny) = e * h1.adjoint();
      g.bottomLeftCorner(ny, n1) = h1 * e;
      m.add(blk.vOffset + p, g);
    }
  }
  for (auto [delay, off] : blk.wOffsets) {
    if (delay != d) continue;
    for (int p = 0; p < cross_count(n1, lay.n2); ++p) {
      const CMat w = cross_basis(n1, lay.n2, p);
      CMat g = CMat::Zero(dim, dim);
      g.topRightCorner(n1, ny) = w * h2.adjoint();
      g.bottomLeftCorner(ny, n1) = h2 * w.adjoint();
      m.add(off + p, g);
    }
  }
  return m;
}

/// Cov([x2; y; vbar]) — order matches PairContext::tripleCov.
AffineHermitianMatrix build_triple_cov(const Layout& lay, const ChannelSet& channels,
                                       int k, int d) {
  const CMat& h1 = channels.of(k, 0);
  const CMat& h2 = channels.of(k, 1);
  const int ny = static_cast<int>(h1.rows());
  const int n1 = lay.n1;
  const int n2 = lay.n2;
  const int slots = lay.slots;
  const int yOff = n2;
  const int vOff = n2 + ny;
  const int dim = n2 + ny + slots * n1;

  const AffineHermitianMatrix rx = build_rx_cov(lay, channels, k, d);
  AffineHermitianMatrix m(dim);
  m.constant.block(yOff, yOff, ny, ny) = rx.constant;
  for (std::size_t i = 0; i < rx.paramIndex.size(); ++i) {
    CMat g = CMat::Zero(dim, dim);
    g.block(yOff, yOff, ny, ny) = rx.coeff[i];
    m.add(rx.paramIndex[i], g);
  }

  const UeBlock& blk = lay.ue[k];
  if (blk.sOffset >= 0) {
    for (int p = 0; p < herm_count(n2); ++p) {
      const CMat e = herm_basis(n2, p);
      CMat g = CMat::Zero(dim, dim);
      g.block(0, 0, n2, n2) = e;
      g.block(yOff, 0, ny, n2) = h2 * e;  // d C / d Sigma
      g.block(0, yOff, n2, ny) = e * h2.adjoint();
      m.add(blk.sOffset + p, g);
    }
  }
  if (blk.vOffset >= 0) {
    for (int p = 0; p < herm_count(n1); ++p) {
      const CMat e = herm_basis(n1, p);
      CMat g = CMat::Zero(dim, dim);
      for (int s = 0; s < slots; ++s) g.block(vOff + s * n1, vOff + s * n1, n1, n1) = e;
      g.block(vOff + d * n1, yOff, n1, ny) = e * h1.adjoint();
      g.block(yOff, vOff + d * n1, ny, n1) = h1 * e;
      m.add(blk.vOffset + p, g);
    }
  }
  for (auto [delay, off] : blk.wOffsets) {
    for (int p = 0; p < cross_count(n1, n2); ++p) {
      const CMat w = cross_basis(n1, n2, p);
      CMat g = CMat::Zero(dim, dim);
      g.block(vOff + delay * n1, 0, n1, n2) = w;
      g.block(0, vOff + delay * n1, n2, n1) = w.adjoint();
      g.block(vOff + delay * n1, yOff, n1, ny) = w * h2.adjoint();
      g.block(yOff, vOff + delay * n1, ny, n1) = h2 * w.adjoint();
      if (delay == d) {
        g.block(yOff, 0, ny, n2) += h1 * w;
        g.block(0, yOff, n2, ny) += w.adjoint() * h1.adjoint();
      }
      m.add(off + p, g);
    }
  }
  return m;
}

/// The per-UE joint transmit covariance (the 18d cone).
AffineHermitianMatrix build_joint_cov(const Layout& lay, int k) {
  const int n1 = lay.n1;
  const int n2 = lay.n2;
  const int slots = lay.slots;
  const int dim = slots * n1 + n2;
  AffineHermitianMatrix m(dim);
  const UeBlock& blk = lay.ue[k];
  if (blk.vOffset >= 0) {
    for (int p = 0; p < herm_count(n1); ++p) {
      const CMat e = herm_basis(n1, p);
      CMat g = CMat::Zero(dim, dim);
      for (int s = 0; s < slots; ++s) g.block(s * n1, s * n1, n1, n1) = e;
      m.add(blk.vOffset + p, g);
    }
  }
  if (blk.sOffset >= 0) {
    for (int p = 0; p < herm_count(n2); ++p) {
      CMat g = CMat::Zero(dim, dim);
      g.block(slots * n1, slots * n1, n2, n2) = herm_basis(n2, p);
      m.add(blk.sOffset + p, g);
    }
  }
  for (auto [delay, off] : blk.wOffsets) {
    for (int p = 0; p < cross_count(n1, n2); ++p) {
      const CMat w = cross_basis(n1, n2, p);
      CMat g = CMat::Zero(dim, dim);
      g.block(delay * n1, slots * n1, n1, n2) = w;
      g.block(slots * n1, delay * n1, n2, n1) = w.adjoint();
      m.add(off + p, g);
    }
  }
  return m;
}

/// A single variable block (V_k or Sigma_k) as an affine matrix.
AffineHermitianMatrix build_block(int n, int offset) {
  AffineHermitianMatrix m(n);
  for (int p = 0; p < herm_count(n); ++p) m.add(offset + p, herm_basis(n, p));
  return m;
}

/// Appends -weight * Phi(X(z), anchor) to the constraint's affine part.
void add_phi_affine(ScalarConstraint& sc, const AffineHermitianMatrix& x,
                    const PhiAnchor& t) {
  const int n = x.dim;
  const double constTrace = std::real((t.inv * x.constant).trace());
  sc.constant -= t.weight * (t.logdet2 + (constTrace - n) * kLog2e);
  for (std::size_t i = 0; i < x.paramIndex.size(); ++i) {
    const double c = std::real((t.inv * x.coeff[i]).trace());
    sc.addLinear(x.paramIndex[i], -t.weight * kLog2e * c);
  }
}

RMat rows_selector(int dim, int begin, int count) {
  RMat sel = RMat::Zero(count, dim);
  sel.block(0, begin, count, count).setIdentity();
  return sel;
}

}  // namespace

SubproblemResult solve_subproblem(const SubproblemSpec& spec) {
  const Anchor& anchor = *spec.anchor;
  const ChannelSet& channels = *spec.channels;
  const SystemConfig& config = *spec.config;
  const Layout lay = make_layout(config, spec.mask);

  SubproblemResult out;

  // Degenerate instance: both RRHs silent (by mask or by zero budgets) ->
  // the zero solution is the only feasible point and every rate is zero.
  if ((spec.mask.rrh1Silent || config.powerRrh1 <= 0.0) &&
      (spec.mask.rrh2Silent || config.powerRrh2 <= 0.0)) {
    out.solution = PrecoderSolution::zeros(config);
    out.rMin = 0.0;
    return out;
  }

  DetMaxProblem prob;
  prob.numParams = lay.numParams;
  prob.objIndex = {lay.tIndex};
  prob.objCoef = {1.0};

  const int n1 = lay.n1;
  const int n2 = lay.n2;
  const int slots = lay.slots;

  // Rate constraints: R_min <= f~_{k,d} for every design pair.
  for (int k = 0; k < config.numUes; ++k) {
    const int ny = config.antennasUe[k];
    for (std::size_t di = 0; di < anchor.designDelays.size(); ++di) {
      const int d = anchor.designDelays[di];
      ScalarConstraint sc;
      sc.addLinear(lay.tIndex, -1.0);
      switch (anchor.form) {
        case RateForm::Full: {
          const AffineHermitianMatrix triple = build_triple_cov(lay, channels, k, d);
          sc.ldWeight = {1.0, 1.0, 1.0};
          sc.ldMat.push_back(build_rx_cov(lay, channels, k, d));
          sc.ldMat.push_back(
              triple.reduced(rows_selector(triple.dim, n2, ny + slots * n1)));
          RMat sel2 = RMat::Zero(n2 + slots * n1, triple.dim);
          sel2.topLeftCorner(n2, n2).setIdentity();
          sel2.bottomRightCorner(slots * n1, slots * n1).setIdentity();
          sc.ldMat.push_back(triple.reduced(sel2));
          if (anchor.vTerm[k].weight != 0.0)
            add_phi_affine(sc, build_block(n1, lay.ue[k].vOffset), anchor.vTerm[k]);
          add_phi_affine(sc, build_pair_cov(lay, channels, k, d), anchor.aTerm[k][di]);
          add_phi_affine(sc, triple, anchor.bTerm[k][di]);
          break;
        }
        case RateForm::Rrh1Only: {
          sc.ldWeight = {1.0, 1.0};
          sc.ldMat.push_back(build_rx_cov(lay, channels, k, d));
          sc.ldMat.push_back(build_block(n1, lay.ue[k].vOffset));
          add_phi_affine(sc, build_pair_cov(lay, channels, k, d), anchor.aTerm[k][di]);
          break;
        }
        case RateForm::Rrh2Only: {
          const AffineHermitianMatrix triple = build_triple_cov(lay, channels, k, d);
          sc.ldWeight = {1.0, 1.0};
          sc.ldMat.push_back(build_rx_cov(lay, channels, k, d));
          sc.ldMat.push_back(build_block(n2, lay.ue[k].sOffset));
          add_phi_affine(sc, triple.reduced(rows_selector(triple.dim, 0, n2 + ny)),
                         anchor.bTerm[k][di]);
          break;
        }
      }
      prob.scalars.push_back(std::move(sc));
    }
  }

  // Per-RRH trace budgets (only over free blocks).
  if (!spec.mask.rrh1Silent) {
    ScalarConstraint sc;
    sc.constant = config.powerRrh1;
    for (int k = 0; k < config.numUes; ++k)
      for (int i = 0; i < n1; ++i) sc.addLinear(lay.ue[k].vOffset + i, -1.0);
    prob.scalars.push_back(std::move(sc));
  }
  if (!spec.mask.rrh2Silent) {
    ScalarConstraint sc;
    sc.constant = config.powerRrh2;
    for (int k = 0; k < config.numUes; ++k)
      for (int i = 0; i < n2; ++i) sc.addLinear(lay.ue[k].sOffset + i, -1.0);
    prob.scalars.push_back(std::move(sc));
  }

  // PSD cones: the joint covariance when cross terms are free, otherwise
  // the diagonal blocks separately.
  for (int k = 0; k < config.numUes; ++k) {
    if (!lay.ue[k].wOffsets.empty()) {
      prob.cones.push_back(build_joint_cov(lay, k));
    } else {
      if (lay.ue[k].vOffset >= 0) prob.cones.push_back(build_block(n1, lay.ue[k].vOffset));
      if (lay.ue[k].sOffset >= 0) prob.cones.push_back(build_block(n2, lay.ue[k].sOffset));
    }
  }

  // Strictly interior start: shrink the anchor, ridge the diagonal blocks,
  // and put R_min safely below the surrogate values.
  const double shrink = 1.0 - 1e-4;
  PrecoderSolution startSol = anchor.point.scaled(shrink);
  double ridge1 = 0.0, ridge2 = 0.0;
  if (!spec.mask.rrh1Silent) {
    double tr = 0.0;
    for (int k = 0; k < config.numUes; ++k) tr += std::real(startSol.rrh1Cov[k].trace());
    ridge1 = std::min(1e-6, (config.powerRrh1 - tr) / (2.0 * config.numUes * n1));
    ridge1 = std::max(ridge1, 0.0);
    for (int k = 0; k < config.numUes; ++k)
      startSol.rrh1Cov[k] += ridge1 * CMat::Identity(n1, n1);
  }
  if (!spec.mask.rrh2Silent) {
    double tr = 0.0;
    for (int k = 0; k < config.numUes; ++k) tr += std::real(startSol.rrh2Cov[k].trace());
    ridge2 = std::min(1e-6, (config.powerRrh2 - tr) / (2.0 * config.numUes * n2));
    ridge2 = std::max(ridge2, 0.0);
    for (int k = 0; k < config.numUes; ++k)
      startSol.rrh2Cov[k] += ridge2 * CMat::Identity(n2, n2);
  }

  RVec z0 = pack_solution(lay, startSol, 0.0);
  double fmin = std::numeric_limits<double>::infinity();
  const std::size_t nRate = anchor.designDelays.size() * config.numUes;
  for (std::size_t i = 0; i < nRate; ++i) {
    fmin = std::min(fmin, prob.scalars[i].value(z0));
  }
  if (!std::isfinite(fmin)) {
    // Interior construction failed (should not happen for feasible anchors).
    out.solution = anchor.point;
    out.status = SubStatus::NumericalFailure;
    return out;
  }
  z0[lay.tIndex] = fmin - std::max(0.1, 0.1 * std::abs(fmin));

  DetMaxOptions dopts;
  dopts.gapAbs = spec.tol.gapAbs;
  dopts.maxNewtonTotal = spec.tol.maxInner;
  const DetMaxResult dres = detmax_maximize(prob, z0, dopts);

  out.solution = unpack_solution(lay, config, dres.z);
  out.gapCertificate = dres.gap;
  out.innerIterations = dres.newtonSteps;
  switch (dres.status) {
    case DetMaxStatus::Optimal: out.status = SubStatus::Optimal; break;
    case DetMaxStatus::MaxIter: out.status = SubStatus::MaxIter; break;
    case DetMaxStatus::NumericalFailure: out.status = SubStatus::NumericalFailure; break;
  }

  // Achieved surrogate minimum at the returned point (>= the epigraph t).
  double rmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nRate; ++i) {
    rmin = std::min(rmin, prob.scalars[i].value(dres.z) + dres.z[lay.tIndex]);
  }
  out.rMin = rmin;

  // The anchor itself is feasible with value min f(anchor) (tangency), so
  // never return anything below it.
  const RVec zAnchor = pack_solution(lay, anchor.point, 0.0);
  double anchorVal = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nRate; ++i) {
    anchorVal = std::min(anchorVal, prob.scalars[i].value(zAnchor));
  }
  if (std::isfinite(anchorVal) && out.rMin < anchorVal) {
    out.solution = anchor.point;
    out.rMin = anchorVal;
  }
  return out;
}

}  // namespace racoop
