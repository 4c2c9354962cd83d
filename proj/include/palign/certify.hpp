#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "palign/linalg.hpp"
#include "palign/stress.hpp"
#include "palign/types.hpp"

namespace palign {

struct AlignedStress {
  int d = 0, m = 0;
  Alignment S;
  Eigen::MatrixXd CS;      // C S
  Eigen::MatrixXd C_of_S;  // blockdiag(S)^T C blockdiag(S)
  Eigen::MatrixXd C_hat;   // blockdiag(sum_j C(S)_{ij})
  Eigen::MatrixXd L_of_S;  // C(S) - C_hat(S)
  Eigen::MatrixXd L_sym;   // (L + L^T) / 2
  bool critical = false;
  double critical_residual = 0.0;  // max_i ||S_i^T [CS]_i - [CS]_i^T S_i||_F
  double tol_crit = 0.0;
};

// tol_crit = 1e-7 (1 + ||C||_F)
double default_crit_tol(const StressSystem& sys);

AlignedStress build_aligned_stress(const StressSystem& sys, const Alignment& S, double tol_crit = -1.0);

struct CertificateMatrix {
  int d = 0, m = 0;
  Eigen::MatrixXd mathcal_L;  // P L P^T, block (p,q) of size m x m holds L_{ij}(p,q)
  Eigen::MatrixXd mathbb_L;   // block (a,b) over skew pairs a, b; symmetrized
  SymEig eig;                 // ascending
  double lambda_minus = 0.0;  // lambda_{d(d-1)/2 + 1}
  double lambda_plus = 0.0;   // lambda_{m d(d-1)/2}
  double tau_eig = 0.0;
};

// m x m block (p, q) of the coordinate-permuted matrix.
Eigen::MatrixXd coordinate_block(const Eigen::MatrixXd& mathcal_L, int m, int p, int q);

// Built from the symmetrized L(S), valid at non-critical S as well.
CertificateMatrix build_certificate_matrix(const AlignedStress& aligned);

// Tr(Omega^T (L + L^T) Omega)
double hessian_quadratic_form(const AlignedStress& aligned, const SkewStack& Omega);

// Omega_hat_i = ((M Omega)_i - (M Omega)_i^T) / 2 with M = L + L^T, so that
// g(Hess Z~, Z~) = sum_i Tr(Omega_hat_i^T Omega_i).
SkewStack hessian_omega_hat(const AlignedStress& aligned, const SkewStack& Omega);

enum class Verdict { nondegenerate, degenerate, not_applicable };
std::string to_string(Verdict v);

struct NondegeneracyResult {
  Verdict verdict = Verdict::not_applicable;
  double lambda_key = 0.0;  // NaN when the horizontal space is trivial
  int rank_LL = 0;
  int rank_target = 0;      // (m-1) d(d-1)/2
  bool psd = false;
  double tau = 0.0;
};

NondegeneracyResult nondegeneracy_test(const CertificateMatrix& cert, bool critical);

struct RadiusReport {
  double c1 = 0, c2 = 0, c3 = 0, c3_noiseless = 0;
  double lambda_minus = 0, lambda_plus = 0;
  double delta = 0, delta0 = 0;
  double zeta = 0, gamma = 0, r = 0, q = 0;
  bool noiseless = false;
};

// Throws ContractError when lambda_minus <= tau_eig (radius undefined).
RadiusReport convergence_radius(const CertificateMatrix& cert, const AlignedStress& aligned, const StressSystem& sys,
                                double zeta, double gamma);

struct CriticalCheck {
  bool critical = false;
  double residual = 0.0;
};
CriticalCheck is_critical(const StressSystem& sys, const Alignment& S, double tol);

struct CertificationReport {
  bool critical = false;
  double critical_residual = 0.0;
  Verdict verdict = Verdict::not_applicable;
  double lambda_key = 0.0;
  double lambda_minus = 0.0, lambda_plus = 0.0, tau_eig = 0.0;
  int rank_LL = 0, rank_target = 0;
  bool radius_defined = false;
  RadiusReport radius;
  bool invariance_check = false;
};

// Full pipeline plus the O(d)-invariance self-check at S Q for a seeded random Q.
CertificationReport certify_alignment(const StressSystem& sys, const Alignment& S, double zeta = 0.5,
                                      double gamma = 0.1, std::uint64_t seed = 0);

}  // namespace palign
