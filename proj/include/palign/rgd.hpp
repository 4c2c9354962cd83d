#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "palign/stress.hpp"
#include "palign/types.hpp"

namespace palign {

struct RgdConfig {
  double beta = 0.5;
  double gamma = 0.1;
  double grad_tol = -1.0;  // <= 0 selects 1e-10 * (1 + ||C||_F)
  int max_iters = 1000;
  int max_backtracks = 60;
};

double default_grad_tol(const StressSystem& sys);

struct RgdRecord {
  int iter = 0;
  double F = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;        // step taken from this iterate; 0 on the terminal row
  double dist_to_ref = 0.0;  // NaN without a reference
  double ratio = 0.0;        // (F_k - F*) / (F_0 - F*)
};

// One row per step taken; a terminal row (alpha = 0) is appended when the gradient test passes.
struct RgdTrace {
  std::vector<RgdRecord> records;
  double F_star = 0.0;
};

enum class Termination { converged, max_iters, step_failure };
std::string to_string(Termination t);

struct RgdResult {
  QuotientAlignment final_quotient;
  Alignment final_alignment;  // canonical lift [I; S~]
  RgdTrace trace;
  int iterations = 0;
  Termination reason = Termination::max_iters;
  double final_F = 0.0;
  double final_grad_norm = 0.0;
};

// Armijo backtracking exhausted max_backtracks; carries the diagnostics and the partial run.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double grad_norm, double F, int backtracks)
      : std::runtime_error(what), grad_norm(grad_norm), F(F), backtracks(backtracks) {}
  double grad_norm, F;
  int backtracks;
  std::optional<RgdResult> partial;
};

// grad F(S) = [S_i Omega_i] with Omega_i = S_i^T [CS]_i - [CS]_i^T S_i; horizontal since C = C^T.
SkewStack riemannian_gradient(const StressSystem& sys, const Alignment& S);

double gradient_norm(const SkewStack& grad);

// Largest beta^l (l >= 0) with F(R(S, -beta^l grad)) - F(S) <= -gamma beta^l ||grad||_F^2.
double armijo_step_size(const StressSystem& sys, const Alignment& S, const SkewStack& grad, const RgdConfig& cfg,
                        int* backtracks = nullptr);

// S^k = [I; S~^k], S~^{k+1} = pi(R_Exp(S^k, -alpha_k grad F(S^k))) until ||grad||_F <= grad_tol.
// Ratios use F* = F(reference) when a reference is given, else the smallest F seen.
RgdResult run_rgd(const StressSystem& sys, const QuotientAlignment& S0, const RgdConfig& cfg,
                  const Alignment* reference = nullptr);

// kappa_0 = 2 gamma (e + 1)^{-1} (m + 1)^{-1/2}
double sufficient_descent_kappa(double gamma, int m);

// Least-squares slope of log(ratio) against iteration over the rows with ratio > 0.
double log_ratio_slope(const RgdTrace& trace);

std::string trace_csv(const RgdTrace& trace);

}  // namespace palign
