#include "palign/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace palign {

Eigen::MatrixXd skew(const Eigen::MatrixXd& A) { return 0.5 * (A - A.transpose()); }
Eigen::MatrixXd sym(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

Eigen::MatrixXd nearest_orthogonal(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd expm_skew(const Eigen::MatrixXd& W) {
  const auto d = W.rows();
  if (d == 1) return Eigen::MatrixXd::Identity(1, 1);
  if (d == 2) {
    const double t = W(1, 0);
    Eigen::MatrixXd R(2, 2);
    R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return R;
  }
  if (d == 3) {
    const double t = std::sqrt(W(2, 1) * W(2, 1) + W(0, 2) * W(0, 2) + W(1, 0) * W(1, 0));
    double a, b;
    if (t < 1e-4) {
      const double t2 = t * t;
      a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
      b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    } else {
      a = std::sin(t) / t;
      b = (1.0 - std::cos(t)) / (t * t);
    }
    return Eigen::MatrixXd::Identity(3, 3) + a * W + b * W * W;
  }
  return W.exp();
}

double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double scale) {
  return static_cast<double>(std::max(rows, cols)) * kEps * std::max(1.0, scale) * 100.0;
}

int count_above(const Eigen::VectorXd& values, double tol) {
  return static_cast<int>((values.array() > tol).count());
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return Eigen::VectorXd();
  if (std::min(A.rows(), A.cols()) > 16) return Eigen::BDCSVD<Eigen::MatrixXd>(A).singularValues();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
}

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return singular_values(A)(0);
}

SymEig sym_eig(const Eigen::MatrixXd& A, bool with_vectors) {
  SymEig out;
  if (A.size() == 0) return out;
  const Eigen::MatrixXd As = sym(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(As, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  out.values = es.eigenvalues();
  if (with_vectors) out.vectors = es.eigenvectors();
  return out;
}

Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = g(rng);
  return M;
}

Eigen::MatrixXd random_orthogonal(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXd G = random_gaussian(d, d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

Eigen::MatrixXd random_skew(int d, std::mt19937_64& rng) {
  return skew(random_gaussian(d, d, rng)) * std::sqrt(2.0);
}

}  // namespace palign
