#pragma once

#include <Eigen/Dense>
#include <string>

#include "palign/framework.hpp"
#include "palign/linalg.hpp"
#include "palign/types.hpp"

namespace palign {

struct LaplacianPair {
  Eigen::MatrixXd laplacian;       // (n+m) x (n+m), points first then views
  Eigen::MatrixXd laplacian_pinv;
  Eigen::VectorXd eigenvalues;     // ascending
  double lambda2 = 0.0;            // algebraic connectivity
};

struct PatchMatrices {
  Eigen::MatrixXd B;  // md x (n+m)
  Eigen::MatrixXd D;  // md x md, block diagonal
};

struct StressSystem {
  PatchFramework fw;
  int d = 0, n = 0, m = 0;
  Eigen::MatrixXd laplacian, laplacian_pinv;
  double lambda2 = 0.0;
  Eigen::MatrixXd B, D;
  Eigen::MatrixXd LpinvBt;  // (n+m) x md; rows of LpinvBt * S are x_k(S) and t_i(S)
  Eigen::MatrixXd C;
  SymEig eigs_C;
  double C_fro = 0.0;
};

// Throws InputError when the point/view graph is disconnected. The pseudoinverse deflates
// eigenvalues below max(n+m, dim_scale) * eps * lambda_max.
LaplacianPair build_graph_laplacian(const PatchFramework& fw);
PatchMatrices build_patch_matrices(const PatchFramework& fw);

namespace kernels {
// Returns LpinvBt and C = D - B Lpinv B^T. The serial variant is the dense reference formula;
// the parallel variant works view-by-view on the column support of B under OpenMP.
void assemble_stress(const PatchFramework& fw, const Eigen::MatrixXd& Lpinv, const PatchMatrices& BD,
                     Eigen::MatrixXd& LpinvBt, Eigen::MatrixXd& C, Exec exec);
}  // namespace kernels

StressSystem build_patch_stress(const PatchFramework& fw, Exec exec = Exec::parallel);

// max_i ||S_i^T S_i - I||_F
double orthogonality_defect(const BlockStack& S);

// F(S) = Tr(C S S^T) >= 0, evaluated as the sum of squared consensus residuals
// ||S_i^T x_{k,i} + t_i(S) - x_k(S)||^2, which equals Tr(C S S^T) because C = W W^T.
// Throws ContractError if a block is not orthogonal to 1e-9.
double alignment_error(const StressSystem& sys, const Alignment& S);

// F(S1) - F(S) as sum over edges of dr . (2 r + dr) with dr the residuals of S1 - S; the residual
// map is linear, so the difference keeps its relative accuracy when F(S) is far from zero.
double alignment_error_change(const StressSystem& sys, const Alignment& S, const Alignment& S1);

// Literal Tr(S^T C S) from the assembled matrix, clamped at 0.
double trace_form(const Eigen::MatrixXd& C, const BlockStack& S);

// C S, row-block i equal to sum_k x_{k,i} r_{k,i}^T with r the consensus residuals.
Eigen::MatrixXd stress_times(const StressSystem& sys, const BlockStack& S);

// Brute-force value of min over t_i, x_k of sum ||S_i^T x_{k,i} + t_i - x_k||^2, solved on the
// incidence system with a complete orthogonal decomposition (minimum-norm solution).
double alignment_error_oracle(const PatchFramework& fw, const Alignment& S);

// Writes C.csv, B.csv, D.csv, L.csv into dir.
void dump_matrices(const StressSystem& sys, const std::string& dir);

}  // namespace palign
