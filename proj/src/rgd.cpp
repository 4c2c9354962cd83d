#include "palign/rgd.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "palign/errors.hpp"
#include "palign/manifold.hpp"

namespace palign {

double default_grad_tol(const StressSystem& sys) { return 1e-10 * (1.0 + sys.C_fro); }

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::step_failure: return "step_failure";
  }
  return "unknown";
}

SkewStack riemannian_gradient(const StressSystem& sys, const Alignment& S) {
  const Eigen::MatrixXd CS = stress_times(sys, S);
  SkewStack g(S.d, S.m());
  for (int i = 0; i < S.m(); ++i) {
    const Eigen::MatrixXd A = S.block(i).transpose() * CS.middleRows(static_cast<Eigen::Index>(i) * S.d, S.d);
    g.block(i) = A - A.transpose();
  }
  return g;
}

double gradient_norm(const SkewStack& grad) { return grad.S.norm(); }

double armijo_step_size(const StressSystem& sys, const Alignment& S, const SkewStack& grad, const RgdConfig& cfg,
                        int* backtracks) {
  const double F0 = alignment_error(sys, S);
  const double g2 = grad.S.squaredNorm();
  double alpha = 1.0;
  for (int l = 0; l <= cfg.max_backtracks; ++l) {
    const double dF = alignment_error_change(sys, S, retract(S, grad, -alpha));
    if (dF <= -cfg.gamma * alpha * g2) {
      if (backtracks) *backtracks = l;
      return alpha;
    }
    alpha *= cfg.beta;
  }
  std::ostringstream os;
  os << "Armijo backtracking failed after " << cfg.max_backtracks << " reductions (||grad||_F = " << std::sqrt(g2)
     << ", F = " << F0 << "); the gradient is below the numerical noise of F";
  throw StepFailure(os.str(), std::sqrt(g2), F0, cfg.max_backtracks);
}

namespace {

void finish_trace(RgdTrace& tr, const Alignment* reference, const StressSystem& sys) {
  double fstar = std::numeric_limits<double>::infinity();
  if (reference) {
    fstar = alignment_error(sys, *reference);
  } else {
    for (const auto& r : tr.records) fstar = std::min(fstar, r.F);
  }
  if (tr.records.empty()) fstar = reference ? fstar : 0.0;
  tr.F_star = fstar;
  const double denom = tr.records.empty() ? 0.0 : tr.records.front().F - fstar;
  for (auto& r : tr.records) r.ratio = denom > 0 ? (r.F - fstar) / denom : 0.0;
}

}  // namespace

RgdResult run_rgd(const StressSystem& sys, const QuotientAlignment& S0, const RgdConfig& cfg, const Alignment* reference) {
  if (!(cfg.beta > 0 && cfg.beta < 1 && cfg.gamma > 0 && cfg.gamma < 1))
    throw ContractError("run_rgd: beta and gamma must lie in (0,1)");
  if (S0.d != sys.d || S0.m() != sys.m - 1) throw ContractError("run_rgd: initial quotient alignment has wrong shape");
  const double tol = cfg.grad_tol > 0 ? cfg.grad_tol : default_grad_tol(sys);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  RgdResult res;
  QuotientAlignment St = S0;
  auto finalize = [&](Termination why, const Alignment& S, double F, double gn) {
    res.final_quotient = St;
    res.final_alignment = S;
    res.reason = why;
    res.final_F = F;
    res.final_grad_norm = gn;
    finish_trace(res.trace, reference, sys);
  };

  for (int k = 0;; ++k) {
    const Alignment S = canonical_lift(St);
    const double F = alignment_error(sys, S);
    const SkewStack g = riemannian_gradient(sys, S);
    const double gn = gradient_norm(g);
    RgdRecord rec;
    rec.iter = k;
    rec.F = F;
    rec.grad_norm = gn;
    rec.dist_to_ref = reference ? procrustes_distance(S, *reference).distance : nan;
    if (gn <= tol) {
      res.trace.records.push_back(rec);
      res.iterations = k;
      finalize(Termination::converged, S, F, gn);
      return res;
    }
    if (k >= cfg.max_iters) {
      res.iterations = k;
      finalize(Termination::max_iters, S, F, gn);
      return res;
    }
    double alpha = 0.0;
    try {
      alpha = armijo_step_size(sys, S, g, cfg);
    } catch (StepFailure& e) {
      res.iterations = k;
      finalize(Termination::step_failure, S, F, gn);
      e.partial = res;
      throw;
    }
    rec.alpha = alpha;
    res.trace.records.push_back(rec);
    St = quotient_of(retract(S, g, -alpha));
  }
}

double sufficient_descent_kappa(double gamma, int m) {
  return 2.0 * gamma / (std::exp(1.0) + 1.0) / std::sqrt(m + 1.0);
}

double log_ratio_slope(const RgdTrace& trace) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& r : trace.records) {
    if (!(r.ratio > 0)) continue;
    const double x = r.iter, y = std::log(r.ratio);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = cnt * sxx - sx * sx;
  return den != 0 ? (cnt * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

std::string trace_csv(const RgdTrace& trace) {
  std::ostringstream os;
  os << "iter,F,grad_norm,alpha,dist_to_ref,ratio\n" << std::setprecision(17);
  for (const auto& r : trace.records)
    os << r.iter << "," << r.F << "," << r.grad_norm << "," << r.alpha << "," << r.dist_to_ref << "," << r.ratio << "\n";
  return os.str();
}

}  // namespace palign
