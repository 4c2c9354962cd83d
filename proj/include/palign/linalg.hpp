#pragma once

#include <Eigen/Dense>
#include <limits>
#include <random>

namespace palign {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Eigen::MatrixXd skew(const Eigen::MatrixXd& A);
Eigen::MatrixXd sym(const Eigen::MatrixXd& A);

// Polar factor U V^T of A = U Sigma V^T.
Eigen::MatrixXd nearest_orthogonal(const Eigen::MatrixXd& A);

// exp(W) for skew W: Givens for d=2, Rodrigues for d=3, Pade scaling-and-squaring otherwise.
Eigen::MatrixXd expm_skew(const Eigen::MatrixXd& W);

// Relative zero threshold: max(rows, cols) * eps * max(1, scale) * 100.
double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double scale);
int count_above(const Eigen::VectorXd& values, double tol);
Eigen::VectorXd singular_values(const Eigen::MatrixXd& A);
double spectral_norm(const Eigen::MatrixXd& A);

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};
SymEig sym_eig(const Eigen::MatrixXd& A, bool with_vectors = true);

// Haar sample on O(d); reflections occur with probability 1/2.
Eigen::MatrixXd random_orthogonal(int d, std::mt19937_64& rng);
Eigen::MatrixXd random_skew(int d, std::mt19937_64& rng);
Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

}  // namespace palign
