// SPDX-License-Identifier: Apache-2.0
#include "racoop/cccp.hpp"

#include <algorithm>
#include <stdexcept>

namespace racoop {

namespace {

struct SchemeSetup {
  RateForm form = RateForm::Full;
  SchemeMask mask;
  std::vector<int> designDelays;
  std::vector<int> evalDelays;
  bool allSilent = false;
};

std::vector<int> all_delays(const SystemConfig& config) {
  std::vector<int> out(config.delayCount());
  for (int d = 0; d < config.delayCount(); ++d) out[d] = d;
  return out;
}

SchemeSetup scheme_setup(const SystemConfig& config, const Scheme& scheme) {
  SchemeSetup s;
  s.evalDelays = all_delays(config);
  switch (scheme.kind) {
    case SchemeKind::Robust:
      s.designDelays = all_delays(config);
      break;
    case SchemeKind::NonCooperative:
      s.mask.crossZero = true;
      s.designDelays = {0};  // rates are delay-invariant without cross terms
      break;
    case SchemeKind::NonRobustCoop:
      s.mask.activeCrossDelays = {0};
      s.designDelays = {0};
      break;
    case SchemeKind::SyncGenie:
      if (scheme.knownDelay < 0 || scheme.knownDelay > config.worstCaseDelay)
        throw std::invalid_argument("genie delay outside the uncertainty set");
      s.mask.activeCrossDelays = {scheme.knownDelay};
      s.designDelays = {scheme.knownDelay};
      s.evalDelays = {scheme.knownDelay};
      break;
    case SchemeKind::TxSelection:
      if (scheme.branch == TxBranch::Rrh1) {
        s.form = RateForm::Rrh1Only;
        s.mask.rrh2Silent = true;
      } else {
        s.form = RateForm::Rrh2Only;
        s.mask.rrh1Silent = true;
      }
      s.designDelays = {0};
      break;
  }
  // Zero power budgets freeze the matching blocks outright.
  if (config.powerRrh1 <= 0.0) s.mask.rrh1Silent = true;
  if (config.powerRrh2 <= 0.0) s.mask.rrh2Silent = true;
  if (s.mask.rrh1Silent && s.mask.rrh2Silent) {
    s.allSilent = true;
  } else if (s.mask.rrh1Silent) {
    s.form = RateForm::Rrh2Only;
    s.designDelays = {0};
  } else if (s.mask.rrh2Silent) {
    s.form = RateForm::Rrh1Only;
    s.designDelays = {0};
  }
  return s;
}

double dot(const PrecoderSolution& a, const PrecoderSolution& b) {
  double out = 0.0;
  for (std::size_t k = 0; k < a.rrh1Cov.size(); ++k) {
    out += std::real((a.rrh1Cov[k].adjoint() * b.rrh1Cov[k]).trace());
    out += std::real((a.rrh2Cov[k].adjoint() * b.rrh2Cov[k]).trace());
    for (std::size_t d = 0; d < a.crossCorr[k].size(); ++d)
      out += std::real((a.crossCorr[k][d].adjoint() * b.crossCorr[k][d]).trace());
  }
  return out;
}

PrecoderSolution lincomb(double c0, const PrecoderSolution& x, double c1,
                         const PrecoderSolution& y1, double c2,
                         const PrecoderSolution& y2) {
  PrecoderSolution out = x;
  for (std::size_t k = 0; k < out.rrh1Cov.size(); ++k) {
    out.rrh1Cov[k] = c0 * x.rrh1Cov[k] + c1 * y1.rrh1Cov[k] + c2 * y2.rrh1Cov[k];
    out.rrh2Cov[k] = c0 * x.rrh2Cov[k] + c1 * y1.rrh2Cov[k] + c2 * y2.rrh2Cov[k];
    for (std::size_t d = 0; d < out.crossCorr[k].size(); ++d)
      out.crossCorr[k][d] = c0 * x.crossCorr[k][d] + c1 * y1.crossCorr[k][d] +
                            c2 * y2.crossCorr[k][d];
  }
  return out;
}

PrecoderSolution blend(const PrecoderSolution& x, const PrecoderSolution& y,
                       double gamma) {
  PrecoderSolution out = x;
  for (std::size_t k = 0; k < out.rrh1Cov.size(); ++k) {
    out.rrh1Cov[k] += gamma * (y.rrh1Cov[k] - x.rrh1Cov[k]);
    out.rrh2Cov[k] += gamma * (y.rrh2Cov[k] - x.rrh2Cov[k]);
    for (std::size_t d = 0; d < out.crossCorr[k].size(); ++d)
      out.crossCorr[k][d] += gamma * (y.crossCorr[k][d] - x.crossCorr[k][d]);
  }
  return out;
}

// ---- factor-space extrapolation --------------------------------------
// Per UE, V = L L^H, Sigma = R R^H and Omega_d = L Q_d R with stacked
// ||Q||_2 <= 1; in (L, R, Q) coordinates the joint-covariance cone is the
// flat spectral ball, so rays reach the boundary at finite step lengths
// (in covariance coordinates the same boundary is only approached
// asymptotically, which is what makes plain MM crawl there).

CMat sqrt_psd(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(m);
  CMat out = CMat::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = std::max(0.0, es.eigenvalues()[i]);
    out.noalias() += std::sqrt(lam) * es.eigenvectors().col(i) *
                     es.eigenvectors().col(i).adjoint();
  }
  return out;
}

struct UeFactors {
  CMat l, r;   // Hermitian PSD square roots
  CMat qStack; // (slots*n1) x n2
};

std::vector<UeFactors> factorize(const PrecoderSolution& s, const SystemConfig& cfg) {
  std::vector<UeFactors> out(cfg.numUes);
  const int n1 = cfg.antennasRrh1;
  const int slots = cfg.delayCount();
  for (int k = 0; k < cfg.numUes; ++k) {
    out[k].l = sqrt_psd(s.rrh1Cov[k]);
    out[k].r = sqrt_psd(s.rrh2Cov[k]);
    const CMat lp = pinv_psd(out[k].l).pinv;
    const CMat rp = pinv_psd(out[k].r).pinv;
    out[k].qStack = CMat::Zero(slots * n1, cfg.antennasRrh2);
    for (int d = 0; d < slots; ++d)
      out[k].qStack.block(d * n1, 0, n1, cfg.antennasRrh2) = lp * s.crossCorr[k][d] * rp;
  }
  return out;
}

PrecoderSolution reconstruct(const std::vector<UeFactors>& f, const SystemConfig& cfg) {
  PrecoderSolution sol = PrecoderSolution::zeros(cfg);
  const int n1 = cfg.antennasRrh1;
  const int slots = cfg.delayCount();
  double tr1 = 0.0, tr2 = 0.0;
  for (int k = 0; k < cfg.numUes; ++k) {
    sol.rrh1Cov[k] = hermitize(f[k].l * f[k].l.adjoint());
    sol.rrh2Cov[k] = hermitize(f[k].r * f[k].r.adjoint());
    tr1 += std::real(sol.rrh1Cov[k].trace());
    tr2 += std::real(sol.rrh2Cov[k].trace());
  }
  const double c1 = (tr1 > cfg.powerRrh1) ? cfg.powerRrh1 / tr1 * (1.0 - 1e-12) : 1.0;
  const double c2 = (tr2 > cfg.powerRrh2) ? cfg.powerRrh2 / tr2 * (1.0 - 1e-12) : 1.0;
  for (int k = 0; k < cfg.numUes; ++k) {
    sol.rrh1Cov[k] *= c1;
    sol.rrh2Cov[k] *= c2;
    // Clip the stacked cross factor into the spectral unit ball.
    Eigen::JacobiSVD<CMat> svd(f[k].qStack, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RVec sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = std::min(sv[i], 1.0 - 1e-6);
    const CMat q = svd.matrixU() * sv.asDiagonal() * svd.matrixV().adjoint();
    const double cw = std::sqrt(c1) * std::sqrt(c2);
    for (int d = 0; d < slots; ++d) {
      sol.crossCorr[k][d] =
          cw * (f[k].l * q.block(d * n1, 0, n1, cfg.antennasRrh2) * f[k].r);
    }
  }
  return sol;
}

std::vector<UeFactors> blend_factors(const std::vector<UeFactors>& x,
                                     const std::vector<UeFactors>& y, double gamma) {
  std::vector<UeFactors> out = x;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].l += gamma * (y[k].l - x[k].l);
    out[k].r += gamma * (y[k].r - x[k].r);
    out[k].qStack += gamma * (y[k].qStack - x[k].qStack);
  }
  return out;
}

/// Zeroes every block the mask freezes (also projects warm starts from a
/// less constrained scheme onto this scheme's feasible set).
PrecoderSolution project_to_mask(const PrecoderSolution& sol,
                                 const SystemConfig& config,
                                 const SchemeMask& mask) {
  PrecoderSolution out = sol;
  const int n1 = config.antennasRrh1;
  const int n2 = config.antennasRrh2;
  std::vector<char> crossFree(config.delayCount(), 0);
  if (!mask.crossFrozen()) {
    if (mask.activeCrossDelays.empty()) {
      std::fill(crossFree.begin(), crossFree.end(), 1);
    } else {
      for (int d : mask.activeCrossDelays) crossFree[d] = 1;
    }
  }
  for (int k = 0; k < config.numUes; ++k) {
    if (mask.rrh1Silent) out.rrh1Cov[k] = CMat::Zero(n1, n1);
    if (mask.rrh2Silent) out.rrh2Cov[k] = CMat::Zero(n2, n2);
    for (int d = 0; d < config.delayCount(); ++d) {
      if (!crossFree[d]) out.crossCorr[k][d] = CMat::Zero(n1, n2);
    }
  }
  return out;
}

CccpTrace zero_trace(const SystemConfig& config, const ChannelSet& channels,
                     const std::vector<int>& evalDelays) {
  CccpTrace trace;
  trace.finalSolution = PrecoderSolution::zeros(config);
  trace.objective = {0.0};
  trace.converged = true;
  trace.finalReport = rate_report(trace.finalSolution, channels, config, evalDelays);
  return trace;
}

}  // namespace

std::string Scheme::name() const {
  switch (kind) {
    case SchemeKind::Robust: return "robust";
    case SchemeKind::TxSelection: return "tx_selection";
    case SchemeKind::NonCooperative: return "non_cooperative";
    case SchemeKind::NonRobustCoop: return "non_robust_coop";
    case SchemeKind::SyncGenie: return "sync_genie";
  }
  return "unknown";
}

PrecoderSolution initialize(const SystemConfig& config, const ChannelSet& channels,
                            const Scheme& scheme) {
  (void)channels;  // the default start is channel-independent
  config.validate();
  PrecoderSolution sol = PrecoderSolution::zeros(config);
  const double v = config.powerRrh1 / (config.numUes * config.antennasRrh1);
  const double s = config.powerRrh2 / (config.numUes * config.antennasRrh2);
  for (int k = 0; k < config.numUes; ++k) {
    sol.rrh1Cov[k] = v * CMat::Identity(config.antennasRrh1, config.antennasRrh1);
    sol.rrh2Cov[k] = s * CMat::Identity(config.antennasRrh2, config.antennasRrh2);
  }
  return project_to_mask(sol, config, scheme_setup(config, scheme).mask);
}

CccpTrace run_cccp(const SystemConfig& config, const ChannelSet& channels,
                   const Scheme& scheme, const CccpOptions& options,
                   const std::optional<PrecoderSolution>& initial) {
  config.validate();

  if (scheme.kind == SchemeKind::TxSelection && scheme.branch == TxBranch::Auto) {
    CccpTrace a = run_cccp(config, channels, Scheme::txSelection(TxBranch::Rrh1),
                           options, initial);
    CccpTrace b = run_cccp(config, channels, Scheme::txSelection(TxBranch::Rrh2),
                           options, initial);
    if (a.solverFailed != b.solverFailed) return a.solverFailed ? b : a;
    return (a.finalReport.minRate >= b.finalReport.minRate) ? a : b;
  }

  const SchemeSetup setup = scheme_setup(config, scheme);
  if (setup.allSilent) return zero_trace(config, channels, setup.evalDelays);

  PrecoderSolution sol = initial ? project_to_mask(*initial, config, setup.mask)
                                 : initialize(config, channels, scheme);

  CccpTrace trace;
  double obj = rate_report(sol, channels, config, setup.designDelays).minRate;
  trace.objective.push_back(obj);

  const auto trueObj = [&](const PrecoderSolution& s) {
    return rate_report(s, channels, config, setup.designDelays).minRate;
  };
  const auto feasible = [&](const PrecoderSolution& s) {
    return check_feasibility(s, config, 1e-9).feasible;
  };

  // One majorize-maximize step: solve the convex subproblem at `x`, then
  // stretch the step along the ray while the true objective improves (a
  // doubling pass brackets the length, golden section refines it). The
  // minorant is very conservative near the PSD boundary, so the raw MM
  // step has a sublinear tail that the stretching removes cheaply.
  const auto mmStep = [&](const PrecoderSolution& x,
                          double xObj) -> std::optional<std::pair<PrecoderSolution, double>> {
    Anchor anchor;
    try {
      anchor = build_anchor(x, channels, config, setup.form, setup.designDelays);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
    SubproblemSpec spec;
    spec.anchor = &anchor;
    spec.channels = &channels;
    spec.config = &config;
    spec.mask = setup.mask;
    spec.tol = options.inner;
    const SubproblemResult res = solve_subproblem(spec);
    if (res.status == SubStatus::NumericalFailure) return std::nullopt;

    // Maximize value(gamma) for gamma >= 1: doubling pass, then golden
    // section inside the bracketing interval.
    const auto lineSearch = [](auto&& value) {
      double bestGamma = 1.0;
      double bestVal = value(1.0);
      double hi = 1.0;
      for (double gamma = 2.0; gamma <= 1048576.0; gamma *= 2.0) {
        const double val = value(gamma);
        if (val <= -1e299) break;
        hi = gamma;
        if (val > bestVal) {
          bestVal = val;
          bestGamma = gamma;
        } else if (gamma > 64.0 * bestGamma) {
          break;
        }
      }
      double a = std::max(1.0, bestGamma / 2.0);
      double b = std::min(hi, bestGamma * 2.0);
      constexpr double kInvPhi = 0.6180339887498949;
      double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
      double f1 = value(x1), f2 = value(x2);
      for (int it = 0; it < 20 && b - a > 1e-3 * std::max(1.0, bestGamma); ++it) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + kInvPhi * (b - a);
          f2 = value(x2);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - kInvPhi * (b - a);
          f1 = value(x1);
        }
        const double g = (f1 >= f2) ? x1 : x2;
        const double v = std::max(f1, f2);
        if (v > bestVal) {
          bestVal = v;
          bestGamma = g;
        }
      }
      return std::make_pair(bestGamma, bestVal);
    };

    const auto covCand = [&](double gamma) { return blend(x, res.solution, gamma); };
    const auto [gCov, vCov] = lineSearch([&](double gamma) {
      const PrecoderSolution cand = covCand(gamma);
      return feasible(cand) ? trueObj(cand) : -1e300;
    });

    const std::vector<UeFactors> fx = factorize(x, config);
    const std::vector<UeFactors> fy = factorize(res.solution, config);
    const auto facCand = [&](double gamma) {
      return project_to_mask(reconstruct(blend_factors(fx, fy, gamma), config),
                             config, setup.mask);
    };
    const auto [gFac, vFac] = lineSearch([&](double gamma) {
      const PrecoderSolution cand = facCand(gamma);
      return feasible(cand) ? trueObj(cand) : -1e300;
    });

    PrecoderSolution best = res.solution;
    double bestVal = trueObj(res.solution);
    if (vCov > bestVal) {
      best = covCand(gCov);
      bestVal = vCov;
    }
    if (vFac > bestVal) {
      best = facCand(gFac);
      bestVal = vFac;
    }
    if (bestVal < xObj) {
      // Inner slack or anchor regularization near the boundary; hold the
      // anchor rather than step backwards.
      return std::make_pair(x, xObj);
    }
    return std::make_pair(best, bestVal);
  };

  // Anderson-accelerated fixed-point loop over the MM map: the candidate
  // mixes the recent (iterate, image) pairs, gets projected back into the
  // feasible set through the factor parametrization, and is kept only when
  // the true objective improves. This follows the curved active set at
  // max-min corners where single-ray extrapolation stalls.
  const auto andersonCandidate =
      [&](const std::vector<PrecoderSolution>& xs,
          const std::vector<PrecoderSolution>& gs,
          int m) -> std::optional<PrecoderSolution> {
    if (m < 1 || m + 1 > static_cast<int>(xs.size())) return std::nullopt;
    // Use the most recent m + 1 pairs.
    const std::size_t base = xs.size() - static_cast<std::size_t>(m) - 1;
    std::vector<PrecoderSolution> resid;
    for (std::size_t i = base; i < xs.size(); ++i)
      resid.push_back(lincomb(1.0, gs[i], -1.0, xs[i], 0.0, xs[i]));
    RMat gram(m, m);
    RVec rhs(m);
    auto dr = [&](int j) {
      return lincomb(1.0, resid[j + 1], -1.0, resid[j], 0.0, resid[j]);
    };
    std::vector<PrecoderSolution> deltas;
    for (int j = 0; j < m; ++j) deltas.push_back(dr(j));
    for (int j = 0; j < m; ++j) {
      rhs[j] = dot(deltas[j], resid[m]);
      for (int k = 0; k < m; ++k) gram(j, k) = dot(deltas[j], deltas[k]);
    }
    gram.diagonal().array() += 1e-12 * (1.0 + gram.trace());
    const RVec theta = gram.ldlt().solve(rhs);
    if (!theta.allFinite()) return std::nullopt;
    PrecoderSolution cand = gs.back();
    for (int j = 0; j < m; ++j) {
      cand = lincomb(1.0, cand, -theta[j], gs[base + j + 1], theta[j], gs[base + j]);
    }
    return cand;
  };

  const auto projectFeasible = [&](const PrecoderSolution& raw) {
    PrecoderSolution psd = raw;
    for (int k = 0; k < config.numUes; ++k) {
      Eigen::SelfAdjointEigenSolver<CMat> e1(hermitize(psd.rrh1Cov[k]));
      psd.rrh1Cov[k] = e1.eigenvectors() *
                       e1.eigenvalues().cwiseMax(0.0).asDiagonal() *
                       e1.eigenvectors().adjoint();
      Eigen::SelfAdjointEigenSolver<CMat> e2(hermitize(psd.rrh2Cov[k]));
      psd.rrh2Cov[k] = e2.eigenvectors() *
                       e2.eigenvalues().cwiseMax(0.0).asDiagonal() *
                       e2.eigenvectors().adjoint();
    }
    return project_to_mask(reconstruct(factorize(psd, config), config), config,
                           setup.mask);
  };

  std::vector<PrecoderSolution> histX, histG;
  while (trace.iterations < options.maxOuter && !trace.solverFailed &&
         !trace.converged) {
    const auto step = mmStep(sol, obj);
    if (!step) {
      trace.solverFailed = true;
      break;
    }
    ++trace.iterations;
    const auto& [y, objY] = *step;
    histX.push_back(sol);
    histG.push_back(y);
    if (histX.size() > 6) {
      histX.erase(histX.begin());
      histG.erase(histG.begin());
    }
    PrecoderSolution next = y;
    double nextVal = objY;
    for (int m = 1; m + 1 <= static_cast<int>(histX.size()); ++m) {
      if (const auto cand = andersonCandidate(histX, histG, m)) {
        const PrecoderSolution proj = projectFeasible(*cand);
        if (feasible(proj)) {
          const double val = trueObj(proj);
          if (val > nextVal) {
            next = proj;
            nextVal = val;
          }
        }
      }
    }
    if (nextVal < obj) {
      trace.converged = true;
      break;
    }
    sol = next;
    trace.objective.push_back(nextVal);
    const double gain = nextVal - obj;
    obj = nextVal;
    if (gain < options.tolOuter) trace.converged = true;
  }

  trace.finalSolution = sol;
  trace.finalReport = rate_report(sol, channels, config, setup.evalDelays);
  return trace;
}

std::map<SchemeKind, CccpTrace> run_scheme_suite(const SystemConfig& config,
                                                 const ChannelSet& channels,
                                                 const SuiteOptions& options) {
  config.validate();
  std::vector<SchemeKind> wanted = options.wanted;
  if (wanted.empty()) {
    wanted = {SchemeKind::TxSelection, SchemeKind::NonCooperative,
              SchemeKind::Robust, SchemeKind::NonRobustCoop, SchemeKind::SyncGenie};
  }
  auto isWanted = [&](SchemeKind k) {
    return std::find(wanted.begin(), wanted.end(), k) != wanted.end();
  };
  const bool needRobust = isWanted(SchemeKind::Robust) || isWanted(SchemeKind::SyncGenie);
  const bool needNonCoop = options.warmStart || isWanted(SchemeKind::NonCooperative) ||
                           needRobust || isWanted(SchemeKind::NonRobustCoop);
  const bool needTxSel = isWanted(SchemeKind::TxSelection) ||
                         (options.warmStart && needNonCoop);

  std::map<SchemeKind, CccpTrace> out;

  if (needTxSel) {
    out[SchemeKind::TxSelection] =
        run_cccp(config, channels, Scheme::txSelection(), options.cccp);
  }
  if (needNonCoop) {
    CccpTrace nc = run_cccp(config, channels, Scheme::nonCooperative(), options.cccp);
    if (options.warmStart && needTxSel) {
      const CccpTrace& ts = out[SchemeKind::TxSelection];
      // A one-RRH solution is non-cooperative; keep whichever candidate wins.
      if (!ts.solverFailed && ts.finalReport.minRate > nc.finalReport.minRate) {
        nc.finalSolution = ts.finalSolution;
        nc.finalReport = ts.finalReport;
      }
    }
    out[SchemeKind::NonCooperative] = std::move(nc);
  }

  auto warmFrom = [&](SchemeKind k) -> std::optional<PrecoderSolution> {
    if (!options.warmStart) return std::nullopt;
    auto it = out.find(k);
    if (it == out.end() || it->second.solverFailed) return std::nullopt;
    return it->second.finalSolution;
  };

  if (needRobust) {
    out[SchemeKind::Robust] = run_cccp(config, channels, Scheme::robust(),
                                       options.cccp, warmFrom(SchemeKind::NonCooperative));
  }
  if (isWanted(SchemeKind::NonRobustCoop)) {
    out[SchemeKind::NonRobustCoop] =
        run_cccp(config, channels, Scheme::nonRobustCoop(), options.cccp,
                 warmFrom(SchemeKind::NonCooperative));
  }
  if (isWanted(SchemeKind::SyncGenie)) {
    out[SchemeKind::SyncGenie] =
        run_cccp(config, channels, Scheme::syncGenie(options.genieDelay),
                 options.cccp, warmFrom(SchemeKind::Robust));
  }

  // Evaluation-time phase offset: re-evaluate every report on the rotated
  // channels (the design above never sees theta).
  if (config.phaseOffsetEval != 0.0) {
    const ChannelSet rotated = apply_phase_offset(channels, config.phaseOffsetEval);
    for (auto& [kind, trace] : out) {
      Scheme s;
      s.kind = kind;
      s.knownDelay = options.genieDelay;
      const SchemeSetup setup = scheme_setup(config, s);
      trace.finalReport =
          rate_report(trace.finalSolution, rotated, config, setup.evalDelays);
    }
  }
  return out;
}

}  // namespace racoop
