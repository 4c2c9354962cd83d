#include "palign/manifold.hpp"

#include "palign/errors.hpp"
#include "palign/linalg.hpp"

namespace palign {

namespace {

void require_same_shape(const BlockStack& a, const BlockStack& b, const char* what) {
  if (a.d != b.d || a.m() != b.m()) throw ContractError(std::string(what) + ": block shapes differ");
}

Eigen::MatrixXd block_sum(const BlockStack& X) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(X.d, X.d);
  for (int i = 0; i < X.m(); ++i) s += X.block(i);
  return s;
}

}  // namespace

SkewStack project_tangent(const Alignment& S, const Eigen::MatrixXd& xi) {
  if (xi.rows() != S.S.rows() || xi.cols() != S.d) throw ContractError("project_tangent: shape mismatch");
  SkewStack out(S.d, S.m());
  for (int i = 0; i < S.m(); ++i)
    out.block(i) = skew(S.block(i).transpose() * xi.middleRows(static_cast<Eigen::Index>(i) * S.d, S.d));
  return out;
}

Eigen::MatrixXd tangent_matrix(const Alignment& S, const SkewStack& Omega) {
  require_same_shape(S, Omega, "tangent_matrix");
  Eigen::MatrixXd Z(S.S.rows(), S.d);
  for (int i = 0; i < S.m(); ++i) Z.middleRows(static_cast<Eigen::Index>(i) * S.d, S.d) = S.block(i) * Omega.block(i);
  return Z;
}

SkewStack vertical_part(const SkewStack& Omega) {
  SkewStack v(Omega.d, Omega.m());
  if (Omega.m() == 0) return v;
  const Eigen::MatrixXd mean = block_sum(Omega) / Omega.m();
  for (int i = 0; i < Omega.m(); ++i) v.block(i) = mean;
  return v;
}

SkewStack horizontal_project(const SkewStack& Omega) {
  SkewStack h = Omega;
  h.S -= vertical_part(Omega).S;
  return h;
}

QuotientAlignment quotient_of(const Alignment& S) {
  QuotientAlignment q(S.d, S.m() - 1);
  for (int i = 1; i < S.m(); ++i) q.block(i - 1) = S.block(i) * S.block(0).transpose();
  return q;
}

Alignment canonical_lift(const QuotientAlignment& St) {
  Alignment S(St.d, St.m() + 1);
  S.block(0).setIdentity();
  S.S.bottomRows(St.S.rows()) = St.S;
  return S;
}

SkewStack horizontal_lift(const QuotientAlignment& St, const SkewStack& Omega_t, const Alignment& S) {
  require_same_shape(St, Omega_t, "horizontal_lift");
  if (S.m() != St.m() + 1 || S.d != St.d) throw ContractError("horizontal_lift: representative has wrong shape");
  if ((quotient_of(S).S - St.S).norm() > 1e-9) throw ContractError("horizontal_lift: pi(S) does not match the base");
  const int m = S.m();
  const auto S1 = S.block(0);
  SkewStack out(S.d, m);
  const Eigen::MatrixXd O1 = -(S1.transpose() * block_sum(Omega_t) * S1) / m;
  out.block(0) = O1;
  for (int i = 0; i + 1 < m; ++i) out.block(i + 1) = S1.transpose() * Omega_t.block(i) * S1 + O1;
  return out;
}

SkewStack push_forward(const Alignment& S, const SkewStack& Omega) {
  require_same_shape(S, Omega, "push_forward");
  const auto S1 = S.block(0);
  SkewStack out(S.d, S.m() - 1);
  for (int i = 1; i < S.m(); ++i) out.block(i - 1) = S1 * (Omega.block(i) - Omega.block(0)) * S1.transpose();
  return out;
}

double metric(const SkewStack& a, const SkewStack& b) {
  require_same_shape(a, b, "metric");
  return (a.S.array() * b.S.array()).sum();
}

double quotient_metric(const QuotientAlignment& St, const SkewStack& Ut, const SkewStack& Vt, const Alignment& S) {
  return metric(horizontal_lift(St, Ut, S), horizontal_lift(St, Vt, S));
}

double quotient_metric_closed_form(const SkewStack& Ut, const SkewStack& Vt, int m) {
  require_same_shape(Ut, Vt, "quotient_metric_closed_form");
  return metric(Ut, Vt) - (block_sum(Ut).array() * block_sum(Vt).array()).sum() / m;
}

Alignment retract(const Alignment& S, const SkewStack& Omega, double scale) {
  require_same_shape(S, Omega, "retract");
  Alignment out(S.d, S.m());
  for (int i = 0; i < S.m(); ++i) {
    Eigen::MatrixXd R = S.block(i) * expm_skew(scale * Omega.block(i));
    if ((R.transpose() * R - Eigen::MatrixXd::Identity(S.d, S.d)).norm() > 1e-9) R = nearest_orthogonal(R);
    out.block(i) = R;
  }
  return out;
}

QuotientAlignment quotient_retract(const QuotientAlignment& St, const SkewStack& Omega_t, double scale) {
  const Alignment S = canonical_lift(St);
  return quotient_of(retract(S, horizontal_lift(St, Omega_t, S), scale));
}

ProcrustesResult procrustes_distance(const BlockStack& S, const BlockStack& T) {
  require_same_shape(S, T, "procrustes_distance");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(T.S.transpose() * S.S, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult r;
  r.Q = svd.matrixU() * svd.matrixV().transpose();
  r.distance = (S.S - T.S * r.Q).norm();
  return r;
}

std::vector<std::pair<int, int>> skew_pairs(int d) {
  std::vector<std::pair<int, int>> p;
  for (int s = 1; s < d; ++s)
    for (int r = 0; r < s; ++r) p.emplace_back(r, s);
  return p;
}

Eigen::VectorXd flatten_omega(const SkewStack& Omega) {
  const auto pairs = skew_pairs(Omega.d);
  const int m = Omega.m();
  Eigen::VectorXd w(static_cast<Eigen::Index>(pairs.size()) * m);
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int i = 0; i < m; ++i) w(p * m + i) = Omega.block(i)(pairs[p].first, pairs[p].second);
  return w;
}

SkewStack unflatten_omega(const Eigen::VectorXd& omega, int d, int m) {
  const auto pairs = skew_pairs(d);
  if (omega.size() != static_cast<Eigen::Index>(pairs.size()) * m) throw ContractError("unflatten_omega: length mismatch");
  SkewStack out(d, m);
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int i = 0; i < m; ++i) {
      const auto [r, s] = pairs[p];
      out.block(i)(r, s) = omega(p * m + i);
      out.block(i)(s, r) = -omega(p * m + i);
    }
  return out;
}

}  // namespace palign
