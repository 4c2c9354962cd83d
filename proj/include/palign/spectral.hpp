#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "palign/framework.hpp"
#include "palign/rgd.hpp"
#include "palign/stress.hpp"
#include "palign/types.hpp"

namespace palign {

struct SpectralInit {
  Alignment S_spec;                   // gauge-fixed so that block 1 is the identity
  Eigen::VectorXd bottom_eigs;        // d smallest eigenvalues of C
  double gap = 0.0;                   // lambda_{d+1}(C) - lambda_d(C), 0 when md = d
  std::vector<double> rounding_residuals;
  std::vector<bool> near_singular;    // sigma_min of the raw block below 1e-8
};

// Bottom d eigenvectors of C scaled by sqrt(m), each d x d block rounded to its polar factor.
SpectralInit spectral_init(const StressSystem& sys);

// lambda_{d+1}(C); NaN when md <= d.
double lambda_d_plus_1(const StressSystem& sys);

struct StabilityReport {
  double K1 = 0, K2 = 0;
  double C_diff_fro = 0;       // ||C - C0||_F
  double C_diff_bound = 0;     // K1 eps + K2 eps^2
  double dist_measured = 0;    // min_Q ||S* - S0 Q||_F
  double dist_bound = 0;       // 4 m ||C - C0||_F / lambda_{d+1}(C0)
  double lhs = 0;              // 4 sqrt(m)(pi sqrt(d(d+1))/lambda_{d+1}(C) + sqrt(m)/lambda_{d+1}(C0))(K1 eps + K2 eps^2)
  double delta_star = 0;       // delta(S*); NaN when S* is not certified non-degenerate
  bool applicable = false;     // lambda_{d+1}(C) above tau
  bool satisfied = false;      // applicable && lhs < delta_star
};

double stability_K1(const StressSystem& sys0, const Alignment& S0);
double stability_K2(const StressSystem& sys0);

// Requires rank(C0) = (m-1)d (ContractError otherwise).
StabilityReport noise_stability_bound(const StressSystem& sys0, const Alignment& S0, const StressSystem& sys,
                                      const Alignment& S_star, double epsilon, double zeta = 0.5,
                                      double gamma = 0.1);

struct SweepConfig {
  std::vector<double> eps;
  int trials = 5;
  RgdConfig rgd{.beta = 0.5, .gamma = 0.1, .grad_tol = -1.0, .max_iters = 100, .max_backtracks = 60};
  double zeta = 0.5;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

struct SweepRow {
  double eps = 0;
  int trial = 0;
  double lambda_d1 = 0;
  double F_spec = 0, F_final = 0;
  double dist_spec_to_S0 = 0;
  int iters = 0;
  double ratio_slope = 0;
  double K1 = 0, K2 = 0;
  double bound_lhs = 0, delta_star = 0;
  bool bound_satisfied = false;
  bool converged = false;
  double dist_star_to_S0 = 0, dist_bound = 0;
  double C_diff_fro = 0, C_diff_bound = 0;
  double rounding_residual = 0;  // max over blocks
};

struct SweepLevel {
  double eps = 0;
  double median_lambda_d1 = 0;
  double median_ratio_slope = 0;  // over converged trials with a defined slope; NaN if none
  double median_F_final = 0;
  int converged = 0, trials = 0;
};

struct NoiseSweepResult {
  std::vector<SweepRow> rows;  // ordered by eps, then trial
  std::vector<SweepLevel> levels;
  double lambda_d1_C0 = 0;
};

// Each trial t draws its noise from a seed that depends on (seed, t) only, so successive noise
// levels rescale the same perturbation directions.
NoiseSweepResult noise_sweep_experiment(const PatchFramework& fw0, const Alignment& S0, const SweepConfig& cfg);

std::uint64_t trial_seed(std::uint64_t base, int trial);

struct QuadGrowthReport {
  int samples = 0;
  int violations = 0;
  double min_ratio = 0;  // min LHS / RHS over samples with RHS > 0
  double lambda_d1 = 0;
};

// Tr(C0 S S^T) >= lambda_{d+1}(C0)/2 * min_Q ||S - S0 Q||_F^2 - 1e-9 on random Haar S.
QuadGrowthReport quad_growth_check(const StressSystem& sys0, const Alignment& S0, int samples, std::uint64_t seed);

std::string sweep_csv(const NoiseSweepResult& r);

}  // namespace palign
