#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "palign/certify.hpp"
#include "palign/errors.hpp"
#include "palign/fixtures.hpp"
#include "palign/manifold.hpp"
#include "palign/rigidity.hpp"

using namespace palign;

namespace {

struct Fixture {
  GeneratedFramework g;
  StressSystem sys;
};

Fixture fixture(const std::string& name, std::uint64_t seed = 1) {
  Fixture f{named_fixture(name, seed), {}};
  f.sys = build_patch_stress(f.g.fw);
  return f;
}

Fixture from_global(const Eigen::MatrixXd& X, const std::vector<std::vector<int>>& views, std::uint64_t seed = 3) {
  Fixture f{framework_from_global(X, views, seed), {}};
  f.sys = build_patch_stress(f.g.fw);
  return f;
}

Verdict verdict_at(const StressSystem& sys, const Alignment& S) {
  const auto a = build_aligned_stress(sys, S);
  return nondegeneracy_test(build_certificate_matrix(a), a.critical).verdict;
}

// Optimal rigid residual between two point clouds with matching columns.
double cloud_procrustes(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G) {
  const Eigen::MatrixXd Pc = P.colwise() - P.rowwise().mean(), Gc = G.colwise() - G.rowwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Pc * Gc.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd Q = svd.matrixU() * svd.matrixV().transpose();
  return (Pc - Q * Gc).norm();
}

}  // namespace

TEST_CASE("realization: reproduces the global configuration and is centered") {
  const auto f = fixture("grid", 2);
  const auto R = realize(f.sys, f.g.truth);
  CHECK(R.points.rowwise().mean().norm() <= 1e-12);
  CHECK(cloud_procrustes(R.points, f.g.global) <= 1e-6);
  CHECK(max_consensus_residual(f.sys, f.g.truth, R) <= 1e-8);
  CHECK(is_perfect_alignment(f.sys, f.g.truth));
}

TEST_CASE("realization: equivariance under a global transform") {
  std::mt19937_64 rng(3);
  const auto f = fixture("grid", 3);
  const auto sys = build_patch_stress(inject_noise(f.g.fw, {0.05, 3}));
  const Alignment S = oracle::random_alignment(2, sys.m, rng);
  const Eigen::MatrixXd Q = random_orthogonal(2, rng);
  Alignment SQ = S;
  SQ.S = S.S * Q;
  CHECK((realize(sys, SQ).points - Q.transpose() * realize(sys, S).points).norm() <= 1e-10);
  CHECK_FALSE(is_perfect_alignment(sys, S));
}

TEST_CASE("realization: single view returns centered local coordinates") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd X = random_gaussian(2, 5, rng);
  const auto f = from_global(X, {{0, 1, 2, 3, 4}});
  const auto R = realize(f.sys, Alignment::identity(2, 1));
  const Eigen::MatrixXd local = f.g.fw.view_coords[0];
  CHECK((R.points - (local.colwise() - local.rowwise().mean())).norm() <= 1e-12);
}

TEST_CASE("infinitesimal rigidity on small frameworks") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X = random_gaussian(2, 5, rng);
  const auto one = from_global(X, {{0, 1, 2, 3, 4}});
  const auto r1 = infinitesimal_rigidity_test(one.g.fw, realize(one.sys, one.g.truth));
  CHECK(r1.rigid);
  CHECK(r1.rank == 5 * 2 - 3);

  const auto a = fixture("geom_intuit_a");
  const auto ra = infinitesimal_rigidity_test(a.g.fw, realize(a.sys, a.g.truth));
  CHECK_FALSE(ra.rigid);
  CHECK(verdict_at(a.sys, a.g.truth) == Verdict::degenerate);

  const auto b = fixture("geom_intuit_b");
  const auto rb = infinitesimal_rigidity_test(b.g.fw, realize(b.sys, b.g.truth));
  CHECK(rb.rigid);
  CHECK(rb.rank == b.g.fw.n * 2 - 3);

  for (const auto& name : named_fixture_names()) {
    const auto f = fixture(name);
    CHECK(infinitesimal_rigidity_test(f.g.fw, realize(f.sys, f.g.truth)).nullity >= 3);
  }
}

TEST_CASE("rigidity matrix rows: one per within-view pair") {
  const auto f = fixture("G_star_1");
  const auto M = rigidity_matrix(f.g.fw, realize(f.sys, f.g.truth));
  CHECK(M.rows() == 3 * 3);
  CHECK(M.cols() == f.g.fw.n * 2);
  CHECK((M.rowwise().sum()).norm() <= 1e-12);
}

TEST_CASE("pairwise overlap ranks on the two-view fixtures") {
  CHECK(overlap_rank_pair(fixture("geom_intuit_a").g.fw, 0, 1).rank == 0);
  CHECK(overlap_rank_pair(fixture("geom_intuit_b").g.fw, 0, 1).rank == 1);
  CHECK(overlap_rank_pair(fixture("geom_intuit_c").g.fw, 0, 1).rank == 2);
  const auto no = overlap_rank_pair(fixture("G_star_1").g.fw, 0, 1);
  CHECK(no.n_shared == 1);
  CHECK_THROWS_AS(overlap_rank_pair(fixture("G_star_1").g.fw, 0, 0), ContractError);
}

TEST_CASE("collinear overlap has rank one; disjoint overlap is flagged") {
  Eigen::MatrixXd X(2, 8);
  X << 0, 1, 2, 3, 4, 1, 2, 3, 0, 0.5, 1, 1.5, 2, 3, -1, 2.5;
  const auto f = from_global(X, {{0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4, 6, 7}});
  const auto r = overlap_rank_pair(f.g.fw, 0, 1);
  CHECK(r.rank == 1);
  CHECK(r.n_shared == 5);
  Eigen::MatrixXd Y(2, 7);
  Y << 0, 1, 0, 1, 5, 6, 5, 0, 0, 1, 1, 5, 5, 6;
  const auto h = from_global(Y, {{0, 1, 2, 3}, {2, 3, 4}, {4, 5, 6}});
  const auto e = overlap_rank_pair(h.g.fw, 0, 2);
  CHECK(e.empty);
  CHECK(e.rank == 0);
}

TEST_CASE("set overlap rank: invariant under a global transform and refuses imperfect input") {
  std::mt19937_64 rng(6);
  const auto f = fixture("nec_cond_loc_rigid_of_views");
  Alignment SQ = f.g.truth;
  SQ.S = SQ.S * random_orthogonal(2, rng);
  const auto a = overlap_rank_sets(f.sys, f.g.truth, {0, 1}, {2, 3});
  const auto b = overlap_rank_sets(f.sys, SQ, {0, 1}, {2, 3});
  CHECK(a.rank == b.rank);
  CHECK((a.singular_values - b.singular_values).norm() <= 1e-9);
  CHECK(a.n_shared == 2);
  CHECK_THROWS_AS(overlap_rank_sets(f.sys, oracle::random_alignment(2, 4, rng), {0}, {1}), ContractError);
  CHECK_THROWS_AS(overlap_rank_sets(f.sys, f.g.truth, {0}, {0}), ContractError);
}

TEST_CASE("two-view tests: verdict table") {
  const auto a = two_view_tests(fixture("geom_intuit_a").sys, fixture("geom_intuit_a").g.truth);
  CHECK(a.critical);
  CHECK(a.rank_M == 0);
  CHECK_FALSE(a.nondegenerate);
  const auto fb = fixture("geom_intuit_b");
  const auto b = two_view_tests(fb.sys, fb.g.truth);
  CHECK(b.nondegenerate);
  CHECK_FALSE(b.unique);
  CHECK(b.rank_B12 == 1);
  const auto fc = fixture("geom_intuit_c");
  const auto c = two_view_tests(fc.sys, fc.g.truth);
  CHECK(c.nondegenerate);
  CHECK(c.unique);
  CHECK_THROWS_AS(two_view_tests(fixture("G_star_1").sys, fixture("G_star_1").g.truth), ContractError);
}

TEST_CASE("two-view criticality residual equals the general test on random alignments") {
  std::mt19937_64 rng(7);
  for (const char* name : {"geom_intuit_b", "geom_intuit_c"}) {
    const auto f = fixture(name);
    const auto sys = build_patch_stress(inject_noise(f.g.fw, {0.05, 1}));
    for (int t = 0; t < 10; ++t) {
      const Alignment S = oracle::random_alignment(2, 2, rng);
      const auto tv = two_view_tests(sys, S);
      const auto cc = is_critical(sys, S, default_crit_tol(sys));
      CHECK(std::abs(tv.critical_residual - cc.residual) <= 1e-9 * (1 + cc.residual));
      CHECK(tv.critical == cc.critical);
    }
  }
}

TEST_CASE("overlap graph: grid, pinned triangle, hinged views, a single-point chain") {
  const auto grid = fixture("grid");
  const auto gg = overlap_graph_analysis(grid.sys, grid.g.truth);
  CHECK(gg.Gbar_components == 1);
  CHECK(gg.coarse_Gbar_size == 1);
  CHECK(gg.unique_sufficient);

  const auto tri = fixture("G_star_1");
  const auto gt = overlap_graph_analysis(tri.sys, tri.g.truth);
  CHECK(gt.coarse_G_size == 3);
  CHECK_FALSE(gt.nondeg_sufficient);
  CHECK(verdict_at(tri.sys, tri.g.truth) == Verdict::nondegenerate);

  const auto hinge = fixture("suff_cond_views_non_deg");
  const auto gh = overlap_graph_analysis(hinge.sys, hinge.g.truth);
  CHECK(gh.coarse_G_size == 1);
  CHECK(gh.nondeg_sufficient);
  CHECK(gh.coarse_Gbar_size == 4);

  const auto chain = fixture("geom_intuit_a");
  const auto gc = overlap_graph_analysis(chain.sys, chain.g.truth);
  CHECK(gc.G_components == 2);
  CHECK(gc.coarse_G_size == 2);
  CHECK_FALSE(gc.nondeg_sufficient);

  std::mt19937_64 rng(8);
  CHECK_THROWS_AS(overlap_graph_analysis(grid.sys, oracle::random_alignment(2, grid.sys.m, rng)), ContractError);
}

TEST_CASE("partition check: necessary conditions and their inconclusive side") {
  const auto cyc = fixture("nec_cond_loc_rigid_of_views");
  const auto pc = partition_necessary_check(cyc.sys, cyc.g.truth);
  CHECK(pc.partitions == 7);
  CHECK(pc.min_rank >= 1);
  CHECK(pc.all_at_least_d_minus_1);
  CHECK_FALSE(pc.degenerate_implied);
  CHECK(verdict_at(cyc.sys, cyc.g.truth) == Verdict::degenerate);

  const auto a = fixture("geom_intuit_a");
  const auto pa = partition_necessary_check(a.sys, a.g.truth);
  CHECK(pa.min_rank == 0);
  CHECK(pa.degenerate_implied);

  const auto grid = fixture("grid");
  const auto pg = partition_necessary_check(grid.sys, grid.g.truth);
  CHECK(pg.partitions == 255);
  CHECK(pg.all_equal_d);
  CHECK(pg.min_rank == 2);
  CHECK(pg.argmin_A.front() == 0);
  CHECK_THROWS_AS(partition_necessary_check(grid.sys, grid.g.truth, 4), InputError);
}

TEST_CASE("certificates: trivial only when non-degenerate") {
  for (const auto& name : named_fixture_names()) {
    const auto f = fixture(name);
    const auto al = build_aligned_stress(f.sys, f.g.truth);
    const auto cert = build_certificate_matrix(al);
    const auto certs = extract_certificates(f.sys, al, cert);
    const bool nondeg = nondegeneracy_test(cert, al.critical).verdict == Verdict::nondegenerate;
    int nontrivial = 0;
    for (const auto& c : certs) nontrivial += !c.trivial;
    if (nondeg) CHECK(nontrivial == 0);
    else CHECK(nontrivial > 0);
  }
}

TEST_CASE("certificates: single-point overlap has a flex with opposite blocks; perturbations are flexes") {
  const auto f = fixture("geom_intuit_a");
  const auto al = build_aligned_stress(f.sys, f.g.truth);
  const auto certs = extract_certificates(f.sys, al, build_certificate_matrix(al));
  REQUIRE(certs.size() == 2);
  CHECK(certs[0].trivial);
  const auto& c = certs[1];
  CHECK_FALSE(c.trivial);
  CHECK((c.Omega.block(0) + c.Omega.block(1)).norm() <= 1e-10);
  CHECK((al.L_sym * c.Omega.S).norm() <= 1e-9);

  for (const char* name : {"geom_intuit_a", "nec_cond_loc_rigid_of_views"}) {
    const auto h = fixture(name);
    const auto ah = build_aligned_stress(h.sys, h.g.truth);
    const auto R = realize(h.sys, h.g.truth);
    const Eigen::MatrixXd M = rigidity_matrix(h.g.fw, R);
    for (const auto& cf : extract_certificates(h.sys, ah, build_certificate_matrix(ah))) {
      if (cf.trivial) continue;
      const Eigen::Map<const Eigen::VectorXd> p(cf.perturbation.data(), cf.perturbation.size());
      CHECK((M * p).cwiseAbs().maxCoeff() <= 1e-8);
      // A flex that is not a rigid motion: the perturbation leaves the trivial null space.
      const Eigen::MatrixXd P = cf.perturbation;
      CHECK(P.norm() > 1e-6);
    }
  }
}

TEST_CASE("certificates: refused for noisy or non-critical input") {
  std::mt19937_64 rng(9);
  const auto f = fixture("grid");
  const auto al = build_aligned_stress(f.sys, oracle::random_alignment(2, f.sys.m, rng));
  CHECK_THROWS_AS(extract_certificates(f.sys, al, build_certificate_matrix(al)), ContractError);
}

TEST_CASE("certificates restrict to certificates after removing a leaf view") {
  // Chain of three bodies hinged at single points; the last body is a leaf.
  Eigen::MatrixXd X(2, 7);
  X << 0, 1, 0.4, 2, 1.6, 3, 2.5, 0, 0.1, 1, 0.2, 1.2, 0.6, -0.8;
  const auto f = from_global(X, {{0, 1, 2}, {1, 3, 4}, {3, 5, 6}});
  const auto al = build_aligned_stress(f.sys, f.g.truth);
  const auto certs = extract_certificates(f.sys, al, build_certificate_matrix(al));
  const PatchFramework red = remove_view(f.g.fw, 2, true);
  const auto sys_red = build_patch_stress(red);
  Alignment S_red(2, 2);
  S_red.S = f.g.truth.S.topRows(4);
  const auto al_red = build_aligned_stress(sys_red, S_red);
  for (const auto& c : certs) {
    SkewStack W(2, 2);
    W.S = c.Omega.S.topRows(4);
    CHECK((al_red.L_sym * W.S).norm() <= 1e-9);
  }
  int nontrivial = 0;
  for (const auto& c : certs) nontrivial += !c.trivial;
  CHECK(nontrivial == 2);
}

TEST_CASE("analyze_rigidity: equivalence chain on the fixtures") {
  for (const auto& name : named_fixture_names()) {
    const auto f = fixture(name);
    const auto rep = analyze_rigidity(f.sys, f.g.truth);
    CHECK(rep.perfect);
    const bool nondeg = verdict_at(f.sys, f.g.truth) == Verdict::nondegenerate;
    CHECK(rep.inf_rigid == nondeg);
    if (rep.affine_rigid) CHECK(rep.inf_rigid);
    if (rep.affine_rigid) {
      const auto nd = nondegeneracy_test(build_certificate_matrix(build_aligned_stress(f.sys, f.g.truth)), true);
      CHECK(nd.rank_LL == nd.rank_target);
    }
  }
  const auto grid = fixture("grid");
  const auto rep = analyze_rigidity(grid.sys, grid.g.truth);
  CHECK(rep.affine_rigid);
  CHECK(rep.rank_C == 16);
  REQUIRE(rep.partition.has_value());
  REQUIRE(rep.graph.has_value());
}

TEST_CASE("d=2 projection corollary: an affinely rigid coordinate implies non-degeneracy") {
  for (const auto& name : named_fixture_names()) {
    const auto f = fixture(name);
    const auto al = build_aligned_stress(f.sys, f.g.truth);
    const auto c = build_certificate_matrix(al);
    const int m = f.sys.m;
    for (int p = 0; p < 2; ++p) {
      const Eigen::VectorXd ev = sym_eig(coordinate_block(c.mathcal_L, m, p, p), false).values;
      if (count_above(ev.cwiseAbs(), c.tau_eig) == m - 1)
        CHECK(nondegeneracy_test(c, al.critical).verdict == Verdict::nondegenerate);
    }
  }
}
