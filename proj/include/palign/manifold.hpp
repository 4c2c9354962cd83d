#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "palign/types.hpp"

namespace palign {

/// Omega_i = Skew(S_i^T xi_i); the tangent vector at S is Z_i = S_i Omega_i.
SkewStack project_tangent(const Alignment& S, const Eigen::MatrixXd& xi);

/// Z_i = S_i Omega_i stacked.
Eigen::MatrixXd tangent_matrix(const Alignment& S, const SkewStack& Omega);

/// Subtracts the block mean, leaving sum_i Omega_i = 0.
SkewStack horizontal_project(const SkewStack& Omega);

/// The vertical remainder: every block equals the block mean.
SkewStack vertical_part(const SkewStack& Omega);

/// pi(S) = S_{2:m} S_1^T.
QuotientAlignment quotient_of(const Alignment& S);

/// [I; S~], the representative with first block equal to the identity.
Alignment canonical_lift(const QuotientAlignment& St);

/// Horizontal lift at representative S of the quotient tangent Z~_i = S~_i Omega~_i:
/// Omega_1 = -m^{-1} S_1^T (sum Omega~_i) S_1, Omega_{i+1} = S_1^T Omega~_i S_1 + Omega_1.
/// Throws ContractError if pi(S) differs from S~ by more than 1e-9.
SkewStack horizontal_lift(const QuotientAlignment& St, const SkewStack& Omega_t, const Alignment& S);

/// Push-forward of a tangent at S through the differential of pi, as skew blocks at pi(S).
SkewStack push_forward(const Alignment& S, const SkewStack& Omega);

/// g(Z, W) = sum_i Tr(Omega_i^T Psi_i) at a common base.
double metric(const SkewStack& a, const SkewStack& b);

/// g~(Z~, W~) evaluated through horizontal lifts at representative S.
double quotient_metric(const QuotientAlignment& St, const SkewStack& Ut, const SkewStack& Vt, const Alignment& S);

/// Closed form sum_i Tr(U_i^T V_i) - m^{-1} sum_{i,j} Tr(U_i^T V_j); Ut, Vt hold m-1 blocks.
double quotient_metric_closed_form(const SkewStack& Ut, const SkewStack& Vt, int m);

/// R_Exp(S, scale * Z): blocks S_i exp(scale * Omega_i), re-orthonormalized by the polar factor
/// when ||S_i^T S_i - I||_F drifts above 1e-9.
Alignment retract(const Alignment& S, const SkewStack& Omega, double scale = 1.0);

/// pi(R_Exp([I; S~], lift of scale * Z~)).
QuotientAlignment quotient_retract(const QuotientAlignment& St, const SkewStack& Omega_t, double scale = 1.0);

struct ProcrustesResult {
  double distance = 0.0;
  Eigen::MatrixXd Q;  // argmin over O(d) of ||S - T Q||_F
};

/// min over Q in O(d) of ||S - T Q||_F with Q = U_1 V_1^T from the SVD of T^T S.
ProcrustesResult procrustes_distance(const BlockStack& S, const BlockStack& T);

/// Index pairs (r, s), r < s, in column-major order over the upper triangle:
/// (0,1), (0,2), (1,2), (0,3), ...
std::vector<std::pair<int, int>> skew_pairs(int d);

/// omega = [omega_{r,s}] with omega_{r,s}(i) = Omega_i(r, s); ||omega||^2 = ||Omega||_F^2 / 2.
Eigen::VectorXd flatten_omega(const SkewStack& Omega);
SkewStack unflatten_omega(const Eigen::VectorXd& omega, int d, int m);

}  // namespace palign
