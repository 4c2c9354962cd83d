#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "palign/errors.hpp"
#include "palign/linalg.hpp"
#include "palign/manifold.hpp"
#include "palign/stress.hpp"

using namespace palign;

namespace {

Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& W) {
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(W.rows(), W.cols()), sum = term;
  for (int k = 1; k < 60; ++k) {
    term = term * W / k;
    sum += term;
  }
  return sum;
}

Alignment representative(const QuotientAlignment& St, const Eigen::MatrixXd& Q) {
  Alignment S = canonical_lift(St);
  S.S = S.S * Q;
  return S;
}

}  // namespace

TEST_CASE("expm_skew agrees with a long Taylor series") {
  std::mt19937_64 rng(1);
  for (int d = 1; d <= 5; ++d)
    for (int t = 0; t < 5; ++t) {
      const Eigen::MatrixXd W = 1.5 * random_skew(d, rng);
      const Eigen::MatrixXd E = expm_skew(W);
      CHECK((E - expm_taylor(W)).norm() <= 1e-12);
      CHECK((E.transpose() * E - Eigen::MatrixXd::Identity(d, d)).norm() <= 1e-13);
    }
}

TEST_CASE("nearest_orthogonal is the polar factor") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd A = random_gaussian(3, 3, rng);
  const Eigen::MatrixXd U = nearest_orthogonal(A);
  CHECK((U.transpose() * U - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-13);
  const Eigen::MatrixXd P = U.transpose() * A;
  CHECK((P - P.transpose()).norm() <= 1e-12);
  CHECK(sym_eig(P, false).values(0) >= -1e-12);
}

TEST_CASE("project_tangent") {
  std::mt19937_64 rng(3);
  const int d = 3, m = 4;
  const Alignment S = oracle::random_alignment(d, m, rng);
  Eigen::MatrixXd sym_dir(m * d, d), tan_dir(m * d, d);
  const SkewStack W = oracle::random_skew_stack(d, m, rng);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd M = random_gaussian(d, d, rng);
    sym_dir.middleRows(i * d, d) = S.block(i) * (M + M.transpose());
    tan_dir.middleRows(i * d, d) = S.block(i) * W.block(i);
  }
  CHECK(project_tangent(S, sym_dir).S.norm() <= 1e-13);
  CHECK((project_tangent(S, tan_dir).S - W.S).norm() <= 1e-12);
  const Eigen::MatrixXd xi = random_gaussian(m * d, d, rng);
  const Eigen::MatrixXd P = tangent_matrix(S, project_tangent(S, xi));
  CHECK(std::abs(((xi - P).array() * P.array()).sum()) <= 1e-10 * xi.squaredNorm());
}

TEST_CASE("horizontal and vertical parts") {
  std::mt19937_64 rng(4);
  const int d = 3, m = 5;
  SkewStack V(d, m);
  const Eigen::MatrixXd W0 = random_skew(d, rng);
  for (int i = 0; i < m; ++i) V.block(i) = W0;
  CHECK(horizontal_project(V).S.norm() <= 1e-14);
  const SkewStack H = oracle::remove_mean(oracle::random_skew_stack(d, m, rng));
  CHECK((horizontal_project(H).S - H.S).norm() <= 1e-14);
  const SkewStack Z = oracle::random_skew_stack(d, m, rng);
  const SkewStack h = horizontal_project(Z), v = vertical_part(Z);
  CHECK((h.S + v.S - Z.S).norm() <= 1e-14);
  CHECK(std::abs(metric(h, v)) <= 1e-10);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < m; ++i) sum += h.block(i);
  CHECK(sum.norm() <= 1e-12);
}

TEST_CASE("horizontal space dimension") {
  std::mt19937_64 rng(5);
  const int d = 3, m = 4, np = 3;
  Eigen::MatrixXd basis(m * np, 2 * m * np);
  for (int c = 0; c < basis.cols(); ++c) basis.col(c) = flatten_omega(horizontal_project(oracle::random_skew_stack(d, m, rng)));
  CHECK(oracle::numeric_rank(basis, 1e-10) == (m - 1) * np);
}

TEST_CASE("quotient map and canonical lift") {
  std::mt19937_64 rng(6);
  const Alignment S = oracle::random_alignment(3, 4, rng);
  const QuotientAlignment St = quotient_of(S);
  CHECK((quotient_of(canonical_lift(St)).S - St.S).norm() <= 1e-14);
  Alignment SQ = S;
  SQ.S = S.S * random_orthogonal(3, rng);
  CHECK((quotient_of(SQ).S - St.S).norm() <= 1e-13);
}

TEST_CASE("horizontal lift: two views") {
  std::mt19937_64 rng(7);
  const int d = 2;
  QuotientAlignment St(d, 1);
  St.block(0) = random_orthogonal(d, rng);
  SkewStack Wt(d, 1);
  Wt.block(0) = random_skew(d, rng);
  const SkewStack lift = horizontal_lift(St, Wt, canonical_lift(St));
  CHECK((lift.block(0) + 0.5 * Wt.block(0)).norm() <= 1e-14);
  CHECK((lift.block(1) - 0.5 * Wt.block(0)).norm() <= 1e-14);
  CHECK(horizontal_lift(St, SkewStack(d, 1), canonical_lift(St)).S.norm() == 0.0);
}

TEST_CASE("horizontal lift: horizontal, pushes forward, rejects wrong base") {
  std::mt19937_64 rng(8);
  for (int d : {2, 3}) {
    const int m = 5;
    const Alignment S = oracle::random_alignment(d, m, rng);
    const QuotientAlignment St = quotient_of(S);
    const SkewStack Wt = oracle::random_skew_stack(d, m - 1, rng);
    const SkewStack lift = horizontal_lift(St, Wt, S);
    CHECK((horizontal_project(lift).S - lift.S).norm() <= 1e-13);
    CHECK((push_forward(S, lift).S - Wt.S).norm() <= 1e-13);
    const Alignment other = oracle::random_alignment(d, m, rng);
    CHECK_THROWS_AS(horizontal_lift(St, Wt, other), ContractError);
  }
}

TEST_CASE("lift norm sandwich") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + t % 2, m = 2 + t % 6;
    const Alignment S = oracle::random_alignment(d, m, rng);
    const SkewStack Wt = oracle::random_skew_stack(d, m - 1, rng);
    const double z = horizontal_lift(quotient_of(S), Wt, S).S.norm();
    const double zt = Wt.S.norm();
    CHECK(z <= zt + 1e-12);
    CHECK(zt <= std::sqrt(m + 1.0) * z + 1e-12);
  }
}

TEST_CASE("quotient metric: representative independence and closed form") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const int d = 2 + t % 2, m = 3 + t % 3;
    const Alignment S = oracle::random_alignment(d, m, rng);
    const QuotientAlignment St = quotient_of(S);
    const SkewStack U = oracle::random_skew_stack(d, m - 1, rng), V = oracle::random_skew_stack(d, m - 1, rng);
    const double a = quotient_metric(St, U, V, S);
    Alignment SQ = S;
    SQ.S = S.S * random_orthogonal(d, rng);
    CHECK(std::abs(quotient_metric(St, U, V, SQ) - a) <= 1e-10 * (1 + std::abs(a)));
    CHECK(std::abs(quotient_metric_closed_form(U, V, m) - a) <= 1e-10 * (1 + std::abs(a)));
    CHECK(quotient_metric(St, U, U, S) > 0);
  }
}

TEST_CASE("quotient metric: d=2, two views, hand value") {
  // One generator J in the single slot: g~(aJ, bJ) = 2ab - 2ab/2 = ab.
  SkewStack U(2, 1), V(2, 1);
  U.block(0) << 0, 1.5, -1.5, 0;
  V.block(0) << 0, -0.4, 0.4, 0;
  QuotientAlignment St(2, 1);
  St.block(0) = Eigen::Matrix2d::Identity();
  CHECK(quotient_metric(St, U, V, canonical_lift(St)) == doctest::Approx(1.5 * -0.4).epsilon(1e-14));
}

TEST_CASE("retraction: identity at zero, first order, orthogonal output") {
  std::mt19937_64 rng(11);
  const Alignment S = oracle::random_alignment(3, 4, rng);
  CHECK((retract(S, SkewStack(3, 4)).S - S.S).norm() == 0.0);
  const SkewStack W = oracle::random_skew_stack(3, 4, rng);
  const Eigen::MatrixXd Z = tangent_matrix(S, W);
  for (double t : {1e-2, 1e-3}) {
    const Alignment R = retract(S, W, t);
    CHECK((R.S - S.S - t * Z).norm() <= 2.0 * t * t * Z.squaredNorm());
    CHECK(orthogonality_defect(R) <= 1e-10);
  }
}

TEST_CASE("retraction second-order bound per block") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + t % 3;
    const Alignment S = oracle::random_alignment(d, 1, rng);
    SkewStack W(d, 1);
    W.block(0) = random_skew(d, rng);
    W.S *= u(rng) / W.S.norm();
    const Eigen::MatrixXd Z = tangent_matrix(S, W);
    CHECK((retract(S, W).S - (S.S + Z)).norm() <= (std::numbers::e - 1) * Z.squaredNorm() + 1e-15);
  }
}

TEST_CASE("quotient retraction does not depend on the representative") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + t % 2, m = 2 + t % 5;
    const QuotientAlignment St = quotient_of(oracle::random_alignment(d, m, rng));
    const SkewStack Wt = oracle::random_skew_stack(d, m - 1, rng);
    const Alignment Sa = representative(St, random_orthogonal(d, rng));
    const Alignment Sb = representative(St, random_orthogonal(d, rng));
    const QuotientAlignment a = quotient_of(retract(Sa, horizontal_lift(St, Wt, Sa)));
    const QuotientAlignment b = quotient_of(retract(Sb, horizontal_lift(St, Wt, Sb)));
    CHECK((a.S - b.S).norm() <= 1e-9);
    CHECK((quotient_retract(St, Wt).S - a.S).norm() <= 1e-9);
  }
}

TEST_CASE("procrustes distance") {
  std::mt19937_64 rng(14);
  const Alignment S = oracle::random_alignment(3, 4, rng);
  const Eigen::MatrixXd Q0 = random_orthogonal(3, rng);
  Alignment T = S;
  T.S = S.S * Q0;
  const auto r = procrustes_distance(T, S);
  CHECK(r.distance <= 1e-12);
  CHECK((r.Q - Q0).norm() <= 1e-10);
  const Alignment U = oracle::random_alignment(3, 4, rng);
  CHECK(std::abs(procrustes_distance(S, U).distance - procrustes_distance(U, S).distance) <= 1e-10);
  CHECK_THROWS_AS(procrustes_distance(S, oracle::random_alignment(3, 3, rng)), ContractError);
}

TEST_CASE("procrustes distance against a one degree grid search") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 10; ++t) {
    const Alignment S = oracle::random_alignment(2, 3, rng), T = oracle::random_alignment(2, 3, rng);
    const double exact = procrustes_distance(S, T).distance;
    const double grid = oracle::procrustes_grid_2d(S, T, 360);
    CHECK(exact <= grid + 1e-12);
    // Moving the optimum by at most half a degree changes ||S - TQ|| by at most ||T|| * angle.
    CHECK(grid - exact <= std::sqrt(6.0) * std::numbers::pi / 360.0 + 1e-12);
  }
}

TEST_CASE("skew pairs and flattening") {
  const auto p = skew_pairs(4);
  REQUIRE(p.size() == 6);
  CHECK(p[0] == std::pair{0, 1});
  CHECK(p[1] == std::pair{0, 2});
  CHECK(p[2] == std::pair{1, 2});
  CHECK(p[3] == std::pair{0, 3});
  std::mt19937_64 rng(16);
  const SkewStack W = oracle::random_skew_stack(3, 4, rng);
  const Eigen::VectorXd w = flatten_omega(W);
  CHECK(std::abs(w.squaredNorm() - W.S.squaredNorm() / 2) <= 1e-13);
  CHECK((unflatten_omega(w, 3, 4).S - W.S).norm() == 0.0);
  CHECK(w(2 * 4 + 1) == W.block(1)(1, 2));
}
