#include "palign/certify.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "palign/errors.hpp"
#include "palign/manifold.hpp"

namespace palign {

double default_crit_tol(const StressSystem& sys) { return 1e-7 * (1.0 + sys.C_fro); }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::nondegenerate: return "nondegenerate";
    case Verdict::degenerate: return "degenerate";
    case Verdict::not_applicable: return "not_applicable";
  }
  return "unknown";
}

AlignedStress build_aligned_stress(const StressSystem& sys, const Alignment& S, double tol_crit) {
  if (S.d != sys.d || S.m() != sys.m) throw ContractError("build_aligned_stress: alignment shape mismatch");
  const int d = sys.d, m = sys.m;
  const Eigen::Index md = static_cast<Eigen::Index>(m) * d;
  AlignedStress a;
  a.d = d;
  a.m = m;
  a.S = S;
  a.CS = stress_times(sys, S);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(md, md);
  for (int i = 0; i < m; ++i) P.block(i * d, i * d, d, d) = S.block(i);
  a.C_of_S = P.transpose() * sys.C * P;
  a.C_of_S = sym(a.C_of_S);
  a.C_hat = Eigen::MatrixXd::Zero(md, md);
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < m; ++j) row += a.C_of_S.block(i * d, j * d, d, d);
    a.C_hat.block(i * d, i * d, d, d) = row;
  }
  a.L_of_S = a.C_of_S - a.C_hat;
  a.L_sym = sym(a.L_of_S);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd A = S.block(i).transpose() * a.CS.middleRows(static_cast<Eigen::Index>(i) * d, d);
    a.critical_residual = std::max(a.critical_residual, (A - A.transpose()).norm());
  }
  a.tol_crit = tol_crit > 0 ? tol_crit : default_crit_tol(sys);
  a.critical = a.critical_residual <= a.tol_crit;
  return a;
}

Eigen::MatrixXd coordinate_block(const Eigen::MatrixXd& mathcal_L, int m, int p, int q) {
  return mathcal_L.block(static_cast<Eigen::Index>(p) * m, static_cast<Eigen::Index>(q) * m, m, m);
}

CertificateMatrix build_certificate_matrix(const AlignedStress& aligned) {
  const int d = aligned.d, m = aligned.m;
  CertificateMatrix c;
  c.d = d;
  c.m = m;
  const Eigen::Index md = static_cast<Eigen::Index>(m) * d;
  c.mathcal_L.resize(md, md);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) c.mathcal_L(p * m + i, q * m + j) = aligned.L_sym(i * d + p, j * d + q);

  const auto pairs = skew_pairs(d);
  const int np = static_cast<int>(pairs.size());
  c.mathbb_L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(np) * m, static_cast<Eigen::Index>(np) * m);
  auto blk = [&](int p, int q) { return coordinate_block(c.mathcal_L, m, p, q); };
  for (int a = 0; a < np; ++a)
    for (int b = 0; b < np; ++b) {
      const auto [r1, s1] = pairs[a];
      const auto [r2, s2] = pairs[b];
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
      if (a == b) M = blk(r1, r1) + blk(s1, s1);
      else if (r1 == r2) M = blk(s1, s2);
      else if (s1 == s2) M = blk(r1, r2);
      else if (s1 == r2) M = -blk(r1, s2);
      else if (s2 == r1) M = -blk(s1, r2);
      c.mathbb_L.block(static_cast<Eigen::Index>(a) * m, static_cast<Eigen::Index>(b) * m, m, m) = M;
    }
  c.mathbb_L = sym(c.mathbb_L);
  c.eig = sym_eig(c.mathbb_L);
  const Eigen::Index N = c.mathbb_L.rows();
  if (N > 0) {
    const double lmax = std::max(std::abs(c.eig.values(0)), std::abs(c.eig.values(N - 1)));
    c.tau_eig = rank_tolerance(N, N, lmax);
    c.lambda_plus = c.eig.values(N - 1);
    c.lambda_minus = np < N ? c.eig.values(np) : std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

double hessian_quadratic_form(const AlignedStress& aligned, const SkewStack& Omega) {
  return 2.0 * (Omega.S.transpose() * aligned.L_sym * Omega.S).trace();
}

SkewStack hessian_omega_hat(const AlignedStress& aligned, const SkewStack& Omega) {
  const Eigen::MatrixXd MO = 2.0 * aligned.L_sym * Omega.S;
  SkewStack h(Omega.d, Omega.m());
  for (int i = 0; i < Omega.m(); ++i) {
    const auto B = MO.middleRows(static_cast<Eigen::Index>(i) * Omega.d, Omega.d);
    h.block(i) = 0.5 * (B - B.transpose());
  }
  return h;
}

NondegeneracyResult nondegeneracy_test(const CertificateMatrix& cert, bool critical) {
  NondegeneracyResult r;
  const int np = cert.d * (cert.d - 1) / 2;
  r.rank_target = (cert.m - 1) * np;
  r.tau = cert.tau_eig;
  r.lambda_key = cert.lambda_minus;
  const auto& ev = cert.eig.values;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (std::abs(ev(k)) > r.tau) ++r.rank_LL;
  r.psd = ev.size() == 0 || ev(0) >= -r.tau;
  if (!critical) {
    r.verdict = Verdict::not_applicable;
  } else if (r.rank_target == 0) {
    r.verdict = Verdict::nondegenerate;  // the quotient is discrete; the Hessian condition is vacuous
  } else {
    r.verdict = (r.psd && cert.lambda_minus > r.tau) ? Verdict::nondegenerate : Verdict::degenerate;
  }
  return r;
}

RadiusReport convergence_radius(const CertificateMatrix& cert, const AlignedStress& aligned, const StressSystem& sys,
                                double zeta, double gamma) {
  if (!(zeta > 0 && zeta < 1)) throw ContractError("convergence_radius: zeta must lie in (0,1)");
  if (!(cert.lambda_minus > cert.tau_eig)) throw ContractError("convergence_radius: alignment is degenerate, radius undefined");
  const int d = sys.d, m = sys.m;
  RadiusReport r;
  r.zeta = zeta;
  r.gamma = gamma;
  for (int k = 0; k < m; ++k) r.c1 = std::max(r.c1, spectral_norm(sys.C.middleRows(static_cast<Eigen::Index>(k) * d, d)));
  for (int i = 0; i < m; ++i) r.c2 = std::max(r.c2, spectral_norm(aligned.CS.middleRows(static_cast<Eigen::Index>(i) * d, d)));
  r.c3_noiseless = sys.eigs_C.values.size() ? std::max(std::abs(sys.eigs_C.values(0)), std::abs(sys.eigs_C.values(sys.eigs_C.values.size() - 1))) : 0.0;
  r.noiseless = alignment_error(sys, aligned.S) <= 1e-10 * (1.0 + sys.C_fro);
  r.c3 = r.noiseless ? r.c3_noiseless : spectral_norm(aligned.L_of_S);
  r.lambda_minus = cert.lambda_minus;
  r.lambda_plus = cert.lambda_plus;
  r.delta = r.lambda_minus / (2.0 * (r.c1 + r.c2 + 2.0 * r.c3));
  r.delta0 = r.lambda_minus / (2.0 * (r.c1 + 2.0 * r.c3_noiseless));
  r.r = (1.0 - zeta) * r.lambda_minus / (r.lambda_plus + zeta * r.lambda_minus);
  r.q = 1.0 - 2.0 * gamma * (1.0 - gamma) * r.r * (1.0 + r.r);
  return r;
}

CriticalCheck is_critical(const StressSystem& sys, const Alignment& S, double tol) {
  const Eigen::MatrixXd CS = stress_times(sys, S);
  CriticalCheck c;
  for (int i = 0; i < S.m(); ++i) {
    const Eigen::MatrixXd A = S.block(i).transpose() * CS.middleRows(static_cast<Eigen::Index>(i) * S.d, S.d);
    c.residual = std::max(c.residual, (A - A.transpose()).norm());
  }
  c.critical = c.residual <= tol;
  return c;
}

CertificationReport certify_alignment(const StressSystem& sys, const Alignment& S, double zeta, double gamma,
                                      std::uint64_t seed) {
  CertificationReport rep;
  const AlignedStress a = build_aligned_stress(sys, S);
  const CertificateMatrix c = build_certificate_matrix(a);
  const NondegeneracyResult nd = nondegeneracy_test(c, a.critical);
  rep.critical = a.critical;
  rep.critical_residual = a.critical_residual;
  rep.verdict = nd.verdict;
  rep.lambda_key = nd.lambda_key;
  rep.lambda_minus = c.lambda_minus;
  rep.lambda_plus = c.lambda_plus;
  rep.tau_eig = c.tau_eig;
  rep.rank_LL = nd.rank_LL;
  rep.rank_target = nd.rank_target;
  if (nd.verdict == Verdict::nondegenerate && nd.rank_target > 0) {
    rep.radius = convergence_radius(c, a, sys, zeta, gamma);
    rep.radius_defined = true;
  }
  std::mt19937_64 rng(seed);
  Alignment SQ = S;
  SQ.S = S.S * random_orthogonal(S.d, rng);
  const AlignedStress aq = build_aligned_stress(sys, SQ);
  const NondegeneracyResult nq = nondegeneracy_test(build_certificate_matrix(aq), aq.critical);
  const bool lam_ok = nd.rank_target == 0 ||
                      std::abs(nq.lambda_key - nd.lambda_key) <= 1e-9 * std::max(1.0, std::abs(nd.lambda_key));
  rep.invariance_check = nq.verdict == nd.verdict && nq.rank_LL == nd.rank_LL && lam_ok;
  return rep;
}

}  // namespace palign
