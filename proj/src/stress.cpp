#include "palign/stress.hpp"

#include <algorithm>
#include <filesystem>

#include "palign/errors.hpp"
#include "palign/io.hpp"

namespace palign {

LaplacianPair build_graph_laplacian(const PatchFramework& fw) {
  check_structure(fw);
  int comps = 0;
  view_components(fw, &comps);
  const auto pv = fw.point_views();
  const bool isolated = std::any_of(pv.begin(), pv.end(), [](const auto& v) { return v.empty(); });
  if (comps != 1 || isolated) throw InputError("point/view graph is disconnected; only connected frameworks are supported");

  const int N = fw.n + fw.m;
  LaplacianPair out;
  out.laplacian = Eigen::MatrixXd::Zero(N, N);
  auto& L = out.laplacian;
  for (int i = 0; i < fw.m; ++i)
    for (int k : fw.view_points[i]) {
      L(k, k) += 1.0;
      L(fw.n + i, fw.n + i) += 1.0;
      L(k, fw.n + i) -= 1.0;
      L(fw.n + i, k) -= 1.0;
    }
  const SymEig es = sym_eig(L);
  out.eigenvalues = es.values;
  const double lmax = es.values(N - 1);
  const double tau = std::max(N, fw.m * fw.d) * kEps * lmax;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(N);
  for (int r = 0; r < N; ++r)
    if (es.values(r) > tau) inv(r) = 1.0 / es.values(r);
  out.laplacian_pinv = es.vectors * inv.asDiagonal() * es.vectors.transpose();
  out.laplacian_pinv = sym(out.laplacian_pinv);
  out.lambda2 = N > 1 ? es.values(1) : 0.0;
  return out;
}

PatchMatrices build_patch_matrices(const PatchFramework& fw) {
  const int d = fw.d, N = fw.n + fw.m;
  PatchMatrices out;
  out.B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fw.m) * d, N);
  out.D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fw.m) * d, static_cast<Eigen::Index>(fw.m) * d);
  for (int i = 0; i < fw.m; ++i) {
    const auto& X = fw.view_coords[i];
    for (std::size_t c = 0; c < fw.view_points[i].size(); ++c)
      out.B.block(i * d, fw.view_points[i][c], d, 1) = X.col(c);
    out.B.block(i * d, fw.n + i, d, 1) = -X.rowwise().sum();
    out.D.block(i * d, i * d, d, d) = X * X.transpose();
  }
  return out;
}

namespace kernels {

void assemble_stress(const PatchFramework& fw, const Eigen::MatrixXd& Lpinv, const PatchMatrices& BD,
                     Eigen::MatrixXd& LpinvBt, Eigen::MatrixXd& C, Exec exec) {
  const int d = fw.d, m = fw.m, N = fw.n + fw.m;
  if (exec == Exec::serial) {
    LpinvBt = Lpinv * BD.B.transpose();
    C = BD.D - BD.B * LpinvBt;
    C = sym(C);
    return;
  }
  // Column support of row-block i of B: its points, then view column n+i.
  std::vector<std::vector<int>> idx(m);
  std::vector<Eigen::MatrixXd> Bc(m);
  for (int i = 0; i < m; ++i) {
    idx[i] = fw.view_points[i];
    idx[i].push_back(fw.n + i);
    const auto& X = fw.view_coords[i];
    Bc[i].resize(d, X.cols() + 1);
    Bc[i].leftCols(X.cols()) = X;
    Bc[i].col(X.cols()) = -X.rowwise().sum();
  }
  LpinvBt.resize(N, static_cast<Eigen::Index>(m) * d);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(N, d);
    for (std::size_t c = 0; c < idx[j].size(); ++c) Y.noalias() += Lpinv.col(idx[j][c]) * Bc[j].col(c).transpose();
    LpinvBt.middleCols(static_cast<Eigen::Index>(j) * d, d) = Y;
  }
  C.resize(static_cast<Eigen::Index>(m) * d, static_cast<Eigen::Index>(m) * d);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd rows(idx[i].size(), static_cast<Eigen::Index>(m) * d);
    for (std::size_t c = 0; c < idx[i].size(); ++c) rows.row(c) = LpinvBt.row(idx[i][c]);
    C.middleRows(static_cast<Eigen::Index>(i) * d, d) = -Bc[i] * rows;
    C.block(i * d, i * d, d, d) += BD.D.block(i * d, i * d, d, d);
  }
  C = sym(C);
}

}  // namespace kernels

StressSystem build_patch_stress(const PatchFramework& fw, Exec exec) {
  StressSystem sys;
  const LaplacianPair lp = build_graph_laplacian(fw);
  PatchMatrices bd = build_patch_matrices(fw);
  sys.fw = fw;
  sys.d = fw.d;
  sys.n = fw.n;
  sys.m = fw.m;
  sys.laplacian = lp.laplacian;
  sys.laplacian_pinv = lp.laplacian_pinv;
  sys.lambda2 = lp.lambda2;
  kernels::assemble_stress(fw, sys.laplacian_pinv, bd, sys.LpinvBt, sys.C, exec);
  sys.B = std::move(bd.B);
  sys.D = std::move(bd.D);
  sys.eigs_C = sym_eig(sys.C);
  sys.C_fro = sys.C.norm();
  return sys;
}

double orthogonality_defect(const BlockStack& S) {
  double worst = 0.0;
  for (int i = 0; i < S.m(); ++i) {
    const Eigen::MatrixXd E = S.block(i).transpose() * S.block(i) - Eigen::MatrixXd::Identity(S.d, S.d);
    worst = std::max(worst, E.norm());
  }
  return worst;
}

namespace {

void check_alignment(const StressSystem& sys, const BlockStack& S) {
  if (S.d != sys.d || S.m() != sys.m) throw ContractError("alignment shape does not match the stress system");
}

// Residual r_{k,i} = S_i^T x_{k,i} + t_i(S) - x_k(S), one d x n_i block per view.
std::vector<Eigen::MatrixXd> consensus_residuals(const StressSystem& sys, const BlockStack& S) {
  const Eigen::MatrixXd U = sys.LpinvBt * S.S;
  std::vector<Eigen::MatrixXd> R(sys.m);
  for (int i = 0; i < sys.m; ++i) {
    const auto& pts = sys.fw.view_points[i];
    Eigen::MatrixXd Ri = S.block(i).transpose() * sys.fw.view_coords[i];
    const Eigen::VectorXd t = U.row(sys.n + i).transpose();
    for (std::size_t c = 0; c < pts.size(); ++c) Ri.col(c) += t - U.row(pts[c]).transpose();
    R[i] = std::move(Ri);
  }
  return R;
}

}  // namespace

double alignment_error(const StressSystem& sys, const Alignment& S) {
  check_alignment(sys, S);
  if (orthogonality_defect(S) > 1e-9) throw ContractError("alignment_error: block is not orthogonal to 1e-9");
  double f = 0.0;
  for (const auto& R : consensus_residuals(sys, S)) f += R.squaredNorm();
  return f;
}

double alignment_error_change(const StressSystem& sys, const Alignment& S, const Alignment& S1) {
  check_alignment(sys, S);
  check_alignment(sys, S1);
  const auto R = consensus_residuals(sys, S);
  BlockStack dS(S1.S - S.S);
  const auto dR = consensus_residuals(sys, dS);
  double df = 0.0;
  for (int i = 0; i < sys.m; ++i) df += (dR[i].array() * (2.0 * R[i] + dR[i]).array()).sum();
  return df;
}

double trace_form(const Eigen::MatrixXd& C, const BlockStack& S) {
  return std::max(0.0, (S.S.transpose() * C * S.S).trace());
}

Eigen::MatrixXd stress_times(const StressSystem& sys, const BlockStack& S) {
  check_alignment(sys, S);
  const auto R = consensus_residuals(sys, S);
  Eigen::MatrixXd CS(S.S.rows(), sys.d);
  for (int i = 0; i < sys.m; ++i) CS.middleRows(static_cast<Eigen::Index>(i) * sys.d, sys.d) = sys.fw.view_coords[i] * R[i].transpose();
  return CS;
}

double alignment_error_oracle(const PatchFramework& fw, const Alignment& S) {
  const int E = fw.num_edges(), N = fw.n + fw.m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(E, N);
  Eigen::MatrixXd Y(E, fw.d);
  int e = 0;
  for (int i = 0; i < fw.m; ++i)
    for (std::size_t c = 0; c < fw.view_points[i].size(); ++c, ++e) {
      A(e, fw.view_points[i][c]) = 1.0;
      A(e, fw.n + i) = -1.0;
      Y.row(e) = (S.block(i).transpose() * fw.view_coords[i].col(c)).transpose();
    }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  const Eigen::MatrixXd U = cod.solve(Y);
  return (A * U - Y).squaredNorm();
}

void dump_matrices(const StressSystem& sys, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p(dir);
  write_matrix_csv((p / "C.csv").string(), sys.C);
  write_matrix_csv((p / "B.csv").string(), sys.B);
  write_matrix_csv((p / "D.csv").string(), sys.D);
  write_matrix_csv((p / "L.csv").string(), sys.laplacian);
}

}  // namespace palign
