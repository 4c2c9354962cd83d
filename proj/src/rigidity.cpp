#include "palign/rigidity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "palign/errors.hpp"
#include "palign/linalg.hpp"
#include "palign/manifold.hpp"

namespace palign {

namespace {

int numeric_rank(const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols) {
  if (sv.size() == 0) return 0;
  return count_above(sv, rank_tolerance(rows, cols, sv.maxCoeff()));
}

OverlapRank centered_rank(const Eigen::MatrixXd& cols) {
  OverlapRank r;
  r.n_shared = static_cast<int>(cols.cols());
  r.empty = r.n_shared == 0;
  if (r.empty) return r;
  Eigen::MatrixXd X = cols;
  X.colwise() -= X.rowwise().mean();
  r.singular_values = singular_values(X);
  r.rank = numeric_rank(r.singular_values, X.rows(), X.cols());
  return r;
}

std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

double coordinate_scale(const PatchFramework& fw) {
  double s = 1.0;
  for (const auto& X : fw.view_coords)
    if (X.size()) s = std::max(s, X.cwiseAbs().maxCoeff());
  return s;
}

// Aligned coordinates S_i^T x_{k,i} + t_i per view, columns ordered like view_points.
std::vector<Eigen::MatrixXd> aligned_views(const StressSystem& sys, const Alignment& S, const Realization& R) {
  std::vector<Eigen::MatrixXd> Y(sys.m);
  for (int i = 0; i < sys.m; ++i) {
    Y[i] = S.block(i).transpose() * sys.fw.view_coords[i];
    Y[i].colwise() += R.translations.col(i);
  }
  return Y;
}

void require_perfect(const StressSystem& sys, const Alignment& S, const char* what) {
  double res = 0;
  if (!is_perfect_alignment(sys, S, &res)) {
    std::ostringstream os;
    os << what << ": requires a perfect alignment (max consensus residual " << res << ")";
    throw ContractError(os.str());
  }
}

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<GraphRound> coarsen(const PatchFramework& fw, const Realization& R, int threshold, int* final_size) {
  std::vector<std::vector<int>> groups = fw.view_points;
  std::vector<GraphRound> rounds;
  for (;;) {
    const int g = static_cast<int>(groups.size());
    UnionFind uf(g);
    for (int a = 0; a < g; ++a)
      for (int b = a + 1; b < g; ++b) {
        const auto shared = intersect_sorted(groups[a], groups[b]);
        if (shared.empty()) continue;
        Eigen::MatrixXd cols(fw.d, static_cast<Eigen::Index>(shared.size()));
        for (std::size_t c = 0; c < shared.size(); ++c) cols.col(c) = R.points.col(shared[c]);
        if (centered_rank(cols).rank >= threshold) uf.unite(a, b);
      }
    std::vector<int> label(g, -1);
    std::vector<std::vector<int>> merged;
    for (int a = 0; a < g; ++a) {
      const int root = uf.find(a);
      if (label[root] < 0) {
        label[root] = static_cast<int>(merged.size());
        merged.emplace_back();
      }
      auto& dst = merged[label[root]];
      std::vector<int> u;
      std::set_union(dst.begin(), dst.end(), groups[a].begin(), groups[a].end(), std::back_inserter(u));
      dst = std::move(u);
    }
    rounds.push_back({g, static_cast<int>(merged.size())});
    if (static_cast<int>(merged.size()) == g) break;
    groups = std::move(merged);
  }
  *final_size = static_cast<int>(groups.size());
  return rounds;
}

}  // namespace

Realization realize(const StressSystem& sys, const Alignment& S) {
  if (S.d != sys.d || S.m() != sys.m) throw ContractError("realize: alignment shape mismatch");
  const Eigen::MatrixXd U = sys.LpinvBt * S.S;
  Realization R;
  R.points = U.topRows(sys.n).transpose();
  R.translations = U.bottomRows(sys.m).transpose();
  const Eigen::VectorXd c = R.points.rowwise().mean();
  R.points.colwise() -= c;
  R.translations.colwise() -= c;
  return R;
}

double max_consensus_residual(const StressSystem& sys, const Alignment& S, const Realization& R) {
  double r = 0;
  const auto Y = aligned_views(sys, S, R);
  for (int i = 0; i < sys.m; ++i)
    for (std::size_t c = 0; c < sys.fw.view_points[i].size(); ++c)
      r = std::max(r, (Y[i].col(c) - R.points.col(sys.fw.view_points[i][c])).norm());
  return r;
}

bool is_perfect_alignment(const StressSystem& sys, const Alignment& S, double* residual) {
  const double r = max_consensus_residual(sys, S, realize(sys, S));
  if (residual) *residual = r;
  return r <= 1e-8 * coordinate_scale(sys.fw);
}

Eigen::MatrixXd rigidity_matrix(const PatchFramework& fw, const Realization& R) {
  Eigen::Index rows = 0;
  for (const auto& v : fw.view_points) rows += static_cast<Eigen::Index>(v.size()) * (v.size() - 1) / 2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(fw.n) * fw.d);
  Eigen::Index r = 0;
  for (const auto& v : fw.view_points)
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b, ++r) {
        const Eigen::VectorXd diff = R.points.col(v[a]) - R.points.col(v[b]);
        M.block(r, static_cast<Eigen::Index>(v[a]) * fw.d, 1, fw.d) = diff.transpose();
        M.block(r, static_cast<Eigen::Index>(v[b]) * fw.d, 1, fw.d) = -diff.transpose();
      }
  return M;
}

RigidityRank infinitesimal_rigidity_test(const PatchFramework& fw, const Realization& R) {
  const Eigen::MatrixXd M = rigidity_matrix(fw, R);
  RigidityRank out;
  out.target = fw.n * fw.d - fw.d * (fw.d + 1) / 2;
  out.rank = M.rows() ? numeric_rank(singular_values(M), M.rows(), M.cols()) : 0;
  out.nullity = static_cast<int>(M.cols()) - out.rank;
  out.rigid = out.rank >= out.target;
  return out;
}

OverlapRank overlap_rank_pair(const PatchFramework& fw, int i, int j) {
  if (i < 0 || j < 0 || i >= fw.m || j >= fw.m || i == j) throw ContractError("overlap_rank_pair: bad view indices");
  const auto shared = intersect_sorted(fw.view_points[i], fw.view_points[j]);
  Eigen::MatrixXd cols(fw.d, static_cast<Eigen::Index>(shared.size()));
  for (std::size_t c = 0; c < shared.size(); ++c) cols.col(c) = fw.view_coords[i].col(fw.local_index(i, shared[c]));
  return centered_rank(cols);
}

Eigen::MatrixXi pairwise_overlap_ranks(const PatchFramework& fw, Exec exec) {
  Eigen::MatrixXi R = Eigen::MatrixXi::Zero(fw.m, fw.m);
  const int m = fw.m;
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const int r = overlap_rank_pair(fw, i, j).rank;
      R(i, j) = r;
      R(j, i) = r;
    }
  return R;
}

OverlapRank overlap_rank_sets(const StressSystem& sys, const Alignment& S, const std::vector<int>& A,
                              const std::vector<int>& B) {
  if (A.empty() || B.empty()) throw ContractError("overlap_rank_sets: view sets must be nonempty");
  std::vector<char> inA(sys.m, 0), inB(sys.m, 0);
  for (int i : A) {
    if (i < 0 || i >= sys.m) throw ContractError("overlap_rank_sets: view index out of range");
    inA[i] = 1;
  }
  for (int j : B) {
    if (j < 0 || j >= sys.m || inA[j]) throw ContractError("overlap_rank_sets: sets must be disjoint views");
    inB[j] = 1;
  }
  require_perfect(sys, S, "overlap_rank_sets");
  const Realization R = realize(sys, S);
  const auto Y = aligned_views(sys, S, R);
  const auto pv = sys.fw.point_views();
  std::vector<Eigen::VectorXd> cols;
  for (int k = 0; k < sys.n; ++k) {
    int first_a = -1;
    bool seen_b = false;
    for (int i : pv[k]) {
      if (inA[i] && first_a < 0) first_a = i;
      if (inB[i]) seen_b = true;
    }
    if (first_a >= 0 && seen_b) cols.push_back(Y[first_a].col(sys.fw.local_index(first_a, k)));
  }
  Eigen::MatrixXd X(sys.d, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) X.col(c) = cols[c];
  return centered_rank(X);
}

TwoViewReport two_view_tests(const StressSystem& sys, const Alignment& S, double tol_crit) {
  if (sys.m != 2) throw ContractError("two_view_tests: requires exactly two views");
  const int d = sys.d;
  const Realization R = realize(sys, S);
  const auto Y = aligned_views(sys, S, R);
  const auto shared = intersect_sorted(sys.fw.view_points[0], sys.fw.view_points[1]);
  const Eigen::Index ns = static_cast<Eigen::Index>(shared.size());
  Eigen::MatrixXd B12(d, ns), B21(d, ns);
  for (Eigen::Index c = 0; c < ns; ++c) {
    B12.col(c) = Y[0].col(sys.fw.local_index(0, shared[c]));
    B21.col(c) = Y[1].col(sys.fw.local_index(1, shared[c]));
  }
  if (ns > 0) {
    B12.colwise() -= B12.rowwise().mean();
    B21.colwise() -= B21.rowwise().mean();
  }
  TwoViewReport t;
  t.M = B12 * B21.transpose();
  t.critical_residual = 0.5 * (t.M - t.M.transpose()).norm();
  t.critical = t.critical_residual <= (tol_crit > 0 ? tol_crit : default_crit_tol(sys));
  const Eigen::VectorXd sv = singular_values(t.M);
  t.rank_M = numeric_rank(sv, d, d);
  t.rank_B12 = overlap_rank_pair(sys.fw, 0, 1).rank;
  const auto pairs = skew_pairs(d);
  const int np = static_cast<int>(pairs.size());
  Eigen::MatrixXd K(np, np);
  std::vector<Eigen::MatrixXd> E(np, Eigen::MatrixXd::Zero(d, d));
  for (int a = 0; a < np; ++a) {
    E[a](pairs[a].first, pairs[a].second) = 1;
    E[a](pairs[a].second, pairs[a].first) = -1;
  }
  for (int a = 0; a < np; ++a)
    for (int b = 0; b < np; ++b) K(a, b) = (E[a].transpose() * t.M * E[b]).trace();
  const SymEig ke = sym_eig(K, false);
  const double scale = std::max(1.0, t.M.norm());
  t.psd = np == 0 || ke.values(0) >= -rank_tolerance(np, np, scale);
  t.nondegenerate = t.critical && t.psd && t.rank_M >= d - 1;
  t.unique = t.rank_M == d;
  return t;
}

GraphReport overlap_graph_analysis(const StressSystem& sys, const Alignment& S) {
  require_perfect(sys, S, "overlap_graph_analysis");
  const Realization R = realize(sys, S);
  GraphReport g;
  g.ranks = pairwise_overlap_ranks(sys.fw);
  g.G_rounds = coarsen(sys.fw, R, sys.d - 1, &g.coarse_G_size);
  g.Gbar_rounds = coarsen(sys.fw, R, sys.d, &g.coarse_Gbar_size);
  g.G_components = g.G_rounds.front().components;
  g.Gbar_components = g.Gbar_rounds.front().components;
  g.nondeg_sufficient = g.coarse_G_size == 1;
  g.unique_sufficient = g.coarse_Gbar_size == 1;
  return g;
}

PartitionReport partition_necessary_check(const StressSystem& sys, const Alignment& S, int max_m, Exec exec) {
  const int m = sys.m, d = sys.d;
  if (m < 2) throw InputError("partition_necessary_check: needs at least two views");
  if (m > max_m || m > 62) {
    std::ostringstream os;
    os << "partition_necessary_check: m = " << m << " exceeds the enumeration cap " << std::min(max_m, 62)
       << " (2^(m-1)-1 partitions); use overlap_graph_analysis or the certificate test instead";
    throw InputError(os.str());
  }
  require_perfect(sys, S, "partition_necessary_check");
  const Realization R = realize(sys, S);
  const auto Y = aligned_views(sys, S, R);
  const auto pv = sys.fw.point_views();
  std::vector<std::uint64_t> vmask(sys.n, 0);
  for (int k = 0; k < sys.n; ++k)
    for (int i : pv[k]) vmask[k] |= std::uint64_t{1} << i;

  const std::uint64_t P = (std::uint64_t{1} << (m - 1)) - 1;
  const std::uint64_t all = (std::uint64_t{1} << m) - 1;
  std::vector<int> ranks(P, 0);
  const long long Pl = static_cast<long long>(P);
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
  for (long long p = 0; p < Pl; ++p) {
    const std::uint64_t Bm = static_cast<std::uint64_t>(p + 1) << 1;
    const std::uint64_t Am = all & ~Bm;
    std::vector<int> cols_k, cols_view;
    for (int k = 0; k < sys.n; ++k) {
      if ((vmask[k] & Bm) && (vmask[k] & Am)) {
        cols_k.push_back(k);
        const std::uint64_t a = vmask[k] & Am;
        cols_view.push_back(std::countr_zero(a));
      }
    }
    Eigen::MatrixXd X(d, static_cast<Eigen::Index>(cols_k.size()));
    for (std::size_t c = 0; c < cols_k.size(); ++c)
      X.col(c) = Y[cols_view[c]].col(sys.fw.local_index(cols_view[c], cols_k[c]));
    ranks[p] = centered_rank(X).rank;
  }

  PartitionReport r;
  r.d = d;
  r.m = m;
  r.partitions = P;
  std::uint64_t best = 0;
  r.min_rank = ranks[0];
  for (std::uint64_t p = 1; p < P; ++p)
    if (ranks[p] < r.min_rank) {
      r.min_rank = ranks[p];
      best = p;
    }
  const std::uint64_t Bm = (best + 1) << 1;
  for (int i = 0; i < m; ++i) ((Bm >> i) & 1 ? r.argmin_B : r.argmin_A).push_back(i);
  r.all_at_least_d_minus_1 = r.min_rank >= d - 1;
  r.all_equal_d = r.min_rank == d;
  r.degenerate_implied = !r.all_at_least_d_minus_1;
  r.non_unique_implied = !r.all_equal_d;
  return r;
}

std::vector<Certificate> extract_certificates(const StressSystem& sys, const AlignedStress& aligned,
                                              const CertificateMatrix& cert) {
  if (!aligned.critical) throw ContractError("extract_certificates: alignment is not critical");
  if (alignment_error(sys, aligned.S) > 1e-10 * (1.0 + sys.C_fro))
    throw ContractError("extract_certificates: certificates are only meaningful for a perfect (noiseless) alignment");
  const int d = sys.d, m = sys.m;
  const auto pairs = skew_pairs(d);
  const int np = static_cast<int>(pairs.size());
  std::vector<Certificate> out;
  if (np == 0) return out;

  for (int a = 0; a < np; ++a) {
    Certificate c;
    c.Omega = SkewStack(d, m);
    for (int i = 0; i < m; ++i) {
      c.Omega.block(i)(pairs[a].first, pairs[a].second) = 1.0;
      c.Omega.block(i)(pairs[a].second, pairs[a].first) = -1.0;
    }
    c.Omega.S /= c.Omega.S.norm();
    c.trivial = true;
    out.push_back(std::move(c));
  }

  const auto& ev = cert.eig.values;
  std::vector<Eigen::Index> null_idx;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (std::abs(ev(k)) <= cert.tau_eig) null_idx.push_back(k);
  if (null_idx.empty()) return out;
  Eigen::MatrixXd H(ev.size(), static_cast<Eigen::Index>(null_idx.size()));
  for (std::size_t c = 0; c < null_idx.size(); ++c)
    H.col(c) = flatten_omega(horizontal_project(unflatten_omega(cert.eig.vectors.col(null_idx[c]), d, m)));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU);
  for (Eigen::Index c = 0; c < svd.singularValues().size(); ++c) {
    if (svd.singularValues()(c) <= 1e-6) continue;
    Certificate cf;
    cf.Omega = unflatten_omega(svd.matrixU().col(c), d, m);
    cf.Omega.S /= cf.Omega.S.norm();
    Eigen::MatrixXd dZ = Eigen::MatrixXd::Zero(d, sys.n + m);
    for (int i = 0; i < m; ++i)
      dZ += cf.Omega.block(i).transpose() * aligned.S.block(i).transpose() *
            sys.LpinvBt.middleCols(static_cast<Eigen::Index>(i) * d, d).transpose();
    cf.perturbation = dZ.leftCols(sys.n);
    out.push_back(std::move(cf));
  }
  return out;
}

int stress_rank(const StressSystem& sys) {
  const auto& v = sys.eigs_C.values;
  if (v.size() == 0) return 0;
  const double lmax = std::max(std::abs(v(0)), std::abs(v(v.size() - 1)));
  return count_above(v.cwiseAbs(), rank_tolerance(v.size(), v.size(), lmax));
}

RigidityReport analyze_rigidity(const StressSystem& sys, const Alignment& S, int max_partition_m) {
  RigidityReport rep;
  const Realization R = realize(sys, S);
  const RigidityRank rr = infinitesimal_rigidity_test(sys.fw, R);
  rep.rank_R = rr.rank;
  rep.rank_R_target = rr.target;
  rep.inf_rigid = rr.rigid;
  rep.rank_C = stress_rank(sys);
  rep.affine_rigid = rep.rank_C == (sys.m - 1) * sys.d;
  rep.perfect = is_perfect_alignment(sys, S, &rep.consensus_residual);
  std::ostringstream note;
  if (sys.m == 2) rep.two_view = two_view_tests(sys, S);
  if (rep.perfect) {
    rep.graph = overlap_graph_analysis(sys, S);
    if (sys.m >= 2 && sys.m <= max_partition_m)
      rep.partition = partition_necessary_check(sys, S, max_partition_m);
    else if (sys.m > max_partition_m)
      note << "partition check skipped (m > " << max_partition_m << "); ";
    const AlignedStress a = build_aligned_stress(sys, S);
    if (a.critical) {
      try {
        rep.certificates = extract_certificates(sys, a, build_certificate_matrix(a));
      } catch (const ContractError& e) {
        note << e.what() << "; ";
      }
    }
  } else {
    note << "alignment is not perfect: graph, partition and certificate analyses skipped; "
            "the rigidity matrix describes the realization of this alignment; ";
  }
  rep.note = note.str();
  return rep;
}

}  // namespace palign
