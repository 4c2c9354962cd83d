#include "palign/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "palign/certify.hpp"
#include "palign/errors.hpp"
#include "palign/linalg.hpp"
#include "palign/manifold.hpp"
#include "palign/rigidity.hpp"

namespace palign {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, int trial) { return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(trial) + 1)); }

double lambda_d_plus_1(const StressSystem& sys) {
  const auto& v = sys.eigs_C.values;
  return v.size() > sys.d ? v(sys.d) : kNaN;
}

SpectralInit spectral_init(const StressSystem& sys) {
  const int d = sys.d, m = sys.m;
  SpectralInit out;
  const auto& E = sys.eigs_C;
  out.bottom_eigs = E.values.head(d);
  out.gap = E.values.size() > d ? E.values(d) - E.values(d - 1) : 0.0;
  const Eigen::MatrixXd V = std::sqrt(static_cast<double>(m)) * E.vectors.leftCols(d);
  Alignment S(d, m);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd Vi = V.middleRows(static_cast<Eigen::Index>(i) * d, d);
    const Eigen::MatrixXd Ri = nearest_orthogonal(Vi);
    out.rounding_residuals.push_back((Vi - Ri).norm());
    out.near_singular.push_back(singular_values(Vi).minCoeff() < 1e-8);
    S.block(i) = Ri;
  }
  const Eigen::MatrixXd S1t = S.block(0).transpose();
  for (int i = 0; i < m; ++i) S.block(i) = S.block(i) * S1t;
  out.S_spec = S;
  return out;
}

double stability_K1(const StressSystem& sys0, const Alignment& S0) {
  const Eigen::MatrixXd X = (sys0.LpinvBt * S0.S).topRows(sys0.n);
  const double xmax = X.rowwise().norm().maxCoeff();
  const double s = std::sqrt(static_cast<double>(sys0.n) * sys0.fw.num_edges());
  return 2.0 * s * (4.0 * xmax * s / sys0.lambda2 + 1.0);
}

double stability_K2(const StressSystem& sys0) {
  const double s = std::sqrt(static_cast<double>(sys0.n) * sys0.fw.num_edges());
  return 2.0 * s * (2.0 * s / sys0.lambda2 + 1.0);
}

StabilityReport noise_stability_bound(const StressSystem& sys0, const Alignment& S0, const StressSystem& sys,
                                      const Alignment& S_star, double epsilon, double zeta, double gamma) {
  if (stress_rank(sys0) != (sys0.m - 1) * sys0.d)
    throw ContractError("noise_stability_bound: noiseless stress matrix must have rank (m-1)d");
  const int d = sys.d, m = sys.m;
  StabilityReport r;
  r.K1 = stability_K1(sys0, S0);
  r.K2 = stability_K2(sys0);
  r.C_diff_fro = (sys.C - sys0.C).norm();
  r.C_diff_bound = r.K1 * epsilon + r.K2 * epsilon * epsilon;
  r.dist_measured = procrustes_distance(S_star, S0).distance;
  const double l0 = lambda_d_plus_1(sys0);
  r.dist_bound = 4.0 * m * r.C_diff_fro / l0;
  const double l = lambda_d_plus_1(sys);
  const auto& v = sys.eigs_C.values;
  const double tau = rank_tolerance(v.size(), v.size(), std::max(std::abs(v(0)), std::abs(v(v.size() - 1))));
  r.applicable = l > tau;
  r.lhs = r.applicable
              ? 4.0 * std::sqrt(m) * (std::numbers::pi * std::sqrt(d * (d + 1.0)) / l + std::sqrt(m) / l0) * r.C_diff_bound
              : kNaN;
  r.delta_star = kNaN;
  const AlignedStress a = build_aligned_stress(sys, S_star);
  const CertificateMatrix c = build_certificate_matrix(a);
  if (nondegeneracy_test(c, a.critical).verdict == Verdict::nondegenerate && c.lambda_minus > c.tau_eig)
    r.delta_star = convergence_radius(c, a, sys, zeta, gamma).delta;
  r.satisfied = r.applicable && !std::isnan(r.delta_star) && r.lhs < r.delta_star;
  return r;
}

NoiseSweepResult noise_sweep_experiment(const PatchFramework& fw0, const Alignment& S0, const SweepConfig& cfg) {
  if (cfg.trials < 1) throw InputError("noise_sweep_experiment: trials must be positive");
  // Same kernel as the trials, so the eps = 0 rows reproduce C0 exactly.
  const StressSystem sys0 = build_patch_stress(fw0, Exec::serial);
  if (stress_rank(sys0) != (sys0.m - 1) * sys0.d)
    throw InputError("noise_sweep_experiment: the noiseless framework is not affinely rigid (rank C0 != (m-1)d)");
  std::vector<double> eps = cfg.eps;
  std::sort(eps.begin(), eps.end());
  NoiseSweepResult res;
  res.lambda_d1_C0 = lambda_d_plus_1(sys0);
  const int ne = static_cast<int>(eps.size());
  const int total = ne * cfg.trials;
  res.rows.resize(total);

#pragma omp parallel for schedule(dynamic) if (cfg.exec == Exec::parallel)
  for (int idx = 0; idx < total; ++idx) {
    const int e = idx / cfg.trials, t = idx % cfg.trials;
    SweepRow row;
    row.eps = eps[e];
    row.trial = t;
    const PatchFramework fw = inject_noise(fw0, NoiseSpec{eps[e], trial_seed(cfg.seed, t)});
    const StressSystem sys = build_patch_stress(fw, Exec::serial);
    row.lambda_d1 = lambda_d_plus_1(sys);
    const SpectralInit spec = spectral_init(sys);
    row.rounding_residual = *std::max_element(spec.rounding_residuals.begin(), spec.rounding_residuals.end());
    row.F_spec = alignment_error(sys, spec.S_spec);
    row.dist_spec_to_S0 = procrustes_distance(spec.S_spec, S0).distance;
    RgdResult run;
    try {
      run = run_rgd(sys, quotient_of(spec.S_spec), cfg.rgd);
    } catch (const StepFailure& f) {
      run = *f.partial;
    }
    row.F_final = run.final_F;
    row.iters = run.iterations;
    row.converged = run.reason == Termination::converged;
    row.ratio_slope = log_ratio_slope(run.trace);
    const StabilityReport st = noise_stability_bound(sys0, S0, sys, run.final_alignment, eps[e], cfg.zeta, cfg.rgd.gamma);
    row.K1 = st.K1;
    row.K2 = st.K2;
    row.bound_lhs = st.lhs;
    row.delta_star = st.delta_star;
    row.bound_satisfied = st.satisfied;
    row.dist_star_to_S0 = st.dist_measured;
    row.dist_bound = st.dist_bound;
    row.C_diff_fro = st.C_diff_fro;
    row.C_diff_bound = st.C_diff_bound;
    res.rows[idx] = row;
  }

  for (int e = 0; e < ne; ++e) {
    SweepLevel lv;
    lv.eps = eps[e];
    lv.trials = cfg.trials;
    std::vector<double> lam, slope, ff;
    for (int t = 0; t < cfg.trials; ++t) {
      const SweepRow& r = res.rows[e * cfg.trials + t];
      lam.push_back(r.lambda_d1);
      ff.push_back(r.F_final);
      if (r.converged) {
        ++lv.converged;
        slope.push_back(r.ratio_slope);
      }
    }
    lv.median_lambda_d1 = median(lam);
    lv.median_ratio_slope = median(slope);
    lv.median_F_final = median(ff);
    res.levels.push_back(lv);
  }
  return res;
}

QuadGrowthReport quad_growth_check(const StressSystem& sys0, const Alignment& S0, int samples, std::uint64_t seed) {
  if (stress_rank(sys0) != (sys0.m - 1) * sys0.d)
    throw ContractError("quad_growth_check: noiseless stress matrix must have rank (m-1)d");
  QuadGrowthReport r;
  r.lambda_d1 = lambda_d_plus_1(sys0);
  r.min_ratio = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Alignment S(sys0.d, sys0.m);
    for (int i = 0; i < sys0.m; ++i) S.block(i) = random_orthogonal(sys0.d, rng);
    const double lhs = alignment_error(sys0, S);
    const double dist = procrustes_distance(S, S0).distance;
    const double rhs = 0.5 * r.lambda_d1 * dist * dist;
    if (lhs < rhs - 1e-9) ++r.violations;
    if (rhs > 0) r.min_ratio = std::min(r.min_ratio, lhs / rhs);
    ++r.samples;
  }
  return r;
}

std::string sweep_csv(const NoiseSweepResult& r) {
  std::ostringstream os;
  os << "eps,trial,lambda_d1,F_spec,F_final,dist_spec_to_S0,iters,ratio_slope,K1,K2,bound_lhs,delta_star,"
        "bound_satisfied,converged,dist_star_to_S0,dist_bound,C_diff_fro,C_diff_bound\n"
     << std::setprecision(12);
  for (const auto& w : r.rows)
    os << w.eps << "," << w.trial << "," << w.lambda_d1 << "," << w.F_spec << "," << w.F_final << ","
       << w.dist_spec_to_S0 << "," << w.iters << "," << w.ratio_slope << "," << w.K1 << "," << w.K2 << ","
       << w.bound_lhs << "," << w.delta_star << "," << (w.bound_satisfied ? 1 : 0) << "," << (w.converged ? 1 : 0)
       << "," << w.dist_star_to_S0 << "," << w.dist_bound << "," << w.C_diff_fro << "," << w.C_diff_bound << "\n";
  return os.str();
}

}  // namespace palign
