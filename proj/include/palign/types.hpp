#pragma once

#include <Eigen/Dense>

namespace palign {

enum class Exec { serial, parallel };

// m square d x d blocks stacked vertically into an (m*d) x d matrix.
struct BlockStack {
  int d = 0;
  Eigen::MatrixXd S;

  BlockStack() = default;
  BlockStack(int d_, int m) : d(d_), S(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) * d_, d_)) {}
  explicit BlockStack(Eigen::MatrixXd stacked) : d(static_cast<int>(stacked.cols())), S(std::move(stacked)) {}

  int m() const { return d > 0 ? static_cast<int>(S.rows() / d) : 0; }
  auto block(int i) { return S.middleRows(static_cast<Eigen::Index>(i) * d, d); }
  auto block(int i) const { return S.middleRows(static_cast<Eigen::Index>(i) * d, d); }
};

// S in O(d)^m.
struct Alignment : BlockStack {
  using BlockStack::BlockStack;
  static Alignment identity(int d, int m) {
    Alignment a(d, m);
    for (int i = 0; i < m; ++i) a.block(i).setIdentity();
    return a;
  }
};

// Representative S~ = S_{2:m} S_1^T of a class in O(d)^m / O(d); holds m-1 blocks.
struct QuotientAlignment : BlockStack {
  using BlockStack::BlockStack;
};

// Skew blocks Omega_i. At base S the tangent vector is Z_i = S_i Omega_i.
struct SkewStack : BlockStack {
  using BlockStack::BlockStack;
};

}  // namespace palign
