#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "palign/errors.hpp"
#include "palign/fixtures.hpp"
#include "palign/manifold.hpp"
#include "palign/rgd.hpp"
#include "palign/spectral.hpp"

using namespace palign;

namespace {

struct Noisy {
  GeneratedFramework g;
  StressSystem sys;
};

Noisy noisy_grid(double eps, std::uint64_t seed) {
  Noisy n{named_fixture("grid", seed), {}};
  n.sys = build_patch_stress(inject_noise(n.g.fw, {eps, seed + 100}));
  return n;
}

}  // namespace

TEST_CASE("gradient vanishes at a perfect alignment") {
  const auto g = named_fixture("grid", 1);
  const auto sys = build_patch_stress(g.fw);
  CHECK(gradient_norm(riemannian_gradient(sys, g.truth)) <= 1e-8 * sys.C_fro);
}

TEST_CASE("gradient is horizontal and matches directional finite differences") {
  std::mt19937_64 rng(2);
  for (const char* name : {"grid", "suff_cond_views_non_deg", "geom_intuit_b"}) {
    const auto g = named_fixture(name, 2);
    const auto sys = build_patch_stress(inject_noise(g.fw, {0.05, 9}));
    const Alignment S = oracle::random_alignment(2, sys.m, rng);
    const SkewStack grad = riemannian_gradient(sys, S);
    CHECK((vertical_part(grad).S).norm() <= 1e-10 * (1 + grad.S.norm()));
    for (int t = 0; t < 20; ++t) {
      const SkewStack W = oracle::random_skew_stack(2, sys.m, rng);
      const double fd = oracle::fd_first([&](double h) { return alignment_error(sys, retract(S, W, h)); }, 1e-6);
      const double exact = metric(grad, W);
      CHECK(std::abs(fd - exact) <= 1e-5 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("gradient norm is invariant under a global transform") {
  std::mt19937_64 rng(3);
  const auto n = noisy_grid(0.05, 3);
  for (int t = 0; t < 5; ++t) {
    const Alignment S = oracle::random_alignment(2, n.sys.m, rng);
    Alignment SQ = S;
    SQ.S = S.S * random_orthogonal(2, rng);
    const double a = gradient_norm(riemannian_gradient(n.sys, S));
    CHECK(std::abs(gradient_norm(riemannian_gradient(n.sys, SQ)) - a) <= 1e-10 * a);
  }
}

TEST_CASE("armijo step: sufficient decrease holds when re-evaluated") {
  std::mt19937_64 rng(4);
  const auto n = noisy_grid(0.02, 4);
  RgdConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const Alignment S = oracle::random_alignment(2, n.sys.m, rng);
    const SkewStack g = riemannian_gradient(n.sys, S);
    int back = -1;
    const double a = armijo_step_size(n.sys, S, g, cfg, &back);
    CHECK(a == doctest::Approx(std::pow(cfg.beta, back)).epsilon(1e-15));
    const double dF = alignment_error(n.sys, retract(S, g, -a)) - alignment_error(n.sys, S);
    CHECK(dF <= -cfg.gamma * a * g.S.squaredNorm() + 1e-12);
    if (back > 0) {
      const double prev = a / cfg.beta;
      const double dF_prev = alignment_error(n.sys, retract(S, g, -prev)) - alignment_error(n.sys, S);
      CHECK(dF_prev > -cfg.gamma * prev * g.S.squaredNorm());
    }
  }
}

TEST_CASE("armijo step: unit step is accepted in a sufficiently flat quadratic regime") {
  // After rescaling the coordinates by c, C scales by c^2; with a small enough stress the quadratic
  // model makes the first trial step pass.
  auto g = named_fixture("grid", 5);
  for (auto& X : g.fw.view_coords) X *= 0.05;
  const auto sys = build_patch_stress(g.fw);
  std::mt19937_64 rng(5);
  const Alignment S = retract(g.truth, horizontal_project(oracle::random_skew_stack(2, sys.m, rng)), 1e-3);
  int back = -1;
  CHECK(armijo_step_size(sys, S, riemannian_gradient(sys, S), RgdConfig{}, &back) == 1.0);
  CHECK(back == 0);
}

TEST_CASE("armijo step: the backtrack cap raises a step failure") {
  const auto n = noisy_grid(0.05, 6);
  std::mt19937_64 rng(6);
  const Alignment S = oracle::random_alignment(2, n.sys.m, rng);
  RgdConfig cfg;
  cfg.max_backtracks = 0;
  cfg.beta = 0.5;
  // An ascent direction can never satisfy the decrease test.
  SkewStack up = riemannian_gradient(n.sys, S);
  up.S *= -1.0;
  CHECK_THROWS_AS(armijo_step_size(n.sys, S, up, cfg), StepFailure);
}

TEST_CASE("run: starting at a critical point returns immediately") {
  const auto g = named_fixture("grid", 7);
  const auto sys = build_patch_stress(g.fw);
  const auto r = run_rgd(sys, quotient_of(g.truth), RgdConfig{});
  CHECK(r.iterations == 0);
  CHECK(r.reason == Termination::converged);
  CHECK(r.trace.records.size() == 1);
}

TEST_CASE("run: exact recovery from a perturbed truth") {
  const auto g = named_fixture("grid", 8);
  const auto sys = build_patch_stress(g.fw);
  std::mt19937_64 rng(8);
  const Alignment start = retract(g.truth, horizontal_project(oracle::random_skew_stack(2, sys.m, rng)), 0.05);
  const auto r = run_rgd(sys, quotient_of(start), RgdConfig{}, &g.truth);
  CHECK(r.reason == Termination::converged);
  CHECK(r.final_F <= 1e-16 * std::max(1.0, sys.C_fro));
  CHECK(procrustes_distance(r.final_alignment, g.truth).distance <= 1e-6);
  CHECK(r.trace.records.back().dist_to_ref <= 1e-6);
}

TEST_CASE("run: monotone descent, vanishing steps, determinism") {
  const auto n = noisy_grid(0.05, 9);
  const auto cfg = RgdConfig{};
  const auto a = run_rgd(n.sys, quotient_of(Alignment::identity(2, n.sys.m)), cfg);
  const auto b = run_rgd(n.sys, quotient_of(Alignment::identity(2, n.sys.m)), cfg);
  REQUIRE(a.trace.records.size() > 3);
  for (std::size_t k = 1; k < a.trace.records.size(); ++k)
    CHECK(a.trace.records[k].F <= a.trace.records[k - 1].F + 1e-14 * a.trace.records[0].F);
  const auto& first = a.trace.records.front();
  const auto& last_step = a.trace.records[a.trace.records.size() - 2];
  CHECK(last_step.alpha * last_step.grad_norm < 1e-6 * first.alpha * first.grad_norm);
  CHECK(trace_csv(a.trace) == trace_csv(b.trace));
  CHECK((a.final_quotient.S - b.final_quotient.S).norm() == 0.0);
  CHECK(trace_csv(a.trace).rfind("iter,F,grad_norm,alpha,dist_to_ref,ratio\n", 0) == 0);
}

TEST_CASE("run: max_iters stops with one record per step") {
  const auto n = noisy_grid(0.05, 10);
  RgdConfig cfg;
  cfg.max_iters = 1;
  const auto r = run_rgd(n.sys, quotient_of(Alignment::identity(2, n.sys.m)), cfg);
  CHECK(r.reason == Termination::max_iters);
  CHECK(r.iterations == 1);
  CHECK(r.trace.records.size() == 1);
  cfg.beta = 1.5;
  CHECK_THROWS_AS(run_rgd(n.sys, quotient_of(Alignment::identity(2, n.sys.m)), cfg), ContractError);
}

TEST_CASE("sufficient descent and safeguard along the quotient iterates") {
  const auto n = noisy_grid(0.03, 11);
  const int m = n.sys.m;
  const RgdConfig cfg;
  const double kappa = sufficient_descent_kappa(cfg.gamma, m);
  CHECK(kappa == doctest::Approx(2 * 0.1 / (std::exp(1.0) + 1) / std::sqrt(m + 1.0)));
  QuotientAlignment St = quotient_of(spectral_init(n.sys).S_spec);
  double mu = 0;
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    const Alignment S = canonical_lift(St);
    const SkewStack g = riemannian_gradient(n.sys, S);
    if (gradient_norm(g) <= default_grad_tol(n.sys)) break;
    const double alpha = armijo_step_size(n.sys, S, g, cfg);
    const QuotientAlignment next = quotient_of(retract(S, g, -alpha));
    const double step = (next.S - St.S).norm();
    const double qgrad = push_forward(S, g).S.norm();
    const double dF = alignment_error(n.sys, canonical_lift(next)) - alignment_error(n.sys, S);
    if (alpha * gradient_norm(g) < 1.0 && step > 0) {
      CHECK(dF <= -kappa * qgrad * step + 1e-14);
      mu = std::max(mu, qgrad / step);
      ++checked;
    }
    St = next;
  }
  CHECK(checked > 0);
  CHECK(std::isfinite(mu));
  CHECK(mu < 1e4);
}

TEST_CASE("log-ratio slope on a synthetic geometric trace") {
  RgdTrace tr;
  for (int k = 0; k < 10; ++k) tr.records.push_back(RgdRecord{k, 0, 0, 0, 0, std::pow(0.5, k)});
  CHECK(log_ratio_slope(tr) == doctest::Approx(std::log(0.5)));
  RgdTrace empty;
  CHECK(std::isnan(log_ratio_slope(empty)));
}
