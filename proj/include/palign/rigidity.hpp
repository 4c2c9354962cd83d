#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "palign/certify.hpp"
#include "palign/framework.hpp"
#include "palign/stress.hpp"
#include "palign/types.hpp"

namespace palign {

struct Realization {
  Eigen::MatrixXd points;        // d x n
  Eigen::MatrixXd translations;  // d x m
  bool centered = true;
};

// x_k and t_i are the columns of S^T B L^dagger (summed over row blocks); the result is shifted so
// that the points have zero mean.
Realization realize(const StressSystem& sys, const Alignment& S);

// max over edges of ||S_i^T x_{k,i} + t_i - x_k(S)||.
double max_consensus_residual(const StressSystem& sys, const Alignment& S, const Realization& R);

// Perfect when every edge residual is at most 1e-8 * max(1, max |x_{k,i}|).
bool is_perfect_alignment(const StressSystem& sys, const Alignment& S, double* residual = nullptr);

Eigen::MatrixXd rigidity_matrix(const PatchFramework& fw, const Realization& R);

struct RigidityRank {
  int rank = 0;
  int target = 0;  // nd - d(d+1)/2
  bool rigid = false;
  int nullity = 0;
};
RigidityRank infinitesimal_rigidity_test(const PatchFramework& fw, const Realization& R);

struct OverlapRank {
  int rank = 0;
  int n_shared = 0;
  bool empty = true;
  Eigen::VectorXd singular_values;
};

// Rank of the centered pairwise overlap matrix with columns x_{k,i}, k shared by views i and j.
OverlapRank overlap_rank_pair(const PatchFramework& fw, int i, int j);

// Rank of the centered B(S)_{A,B}; A and B are disjoint nonempty view sets. Columns use the lowest
// view index of A that holds the point. Throws ContractError unless S is perfect.
OverlapRank overlap_rank_sets(const StressSystem& sys, const Alignment& S, const std::vector<int>& A,
                              const std::vector<int>& B);

// m x m ranks (diagonal 0, empty overlaps 0).
Eigen::MatrixXi pairwise_overlap_ranks(const PatchFramework& fw, Exec exec = Exec::parallel);

struct TwoViewReport {
  bool critical = false;
  double critical_residual = 0.0;  // ||M - M^T||_F / 2 with M = Bbar(S)_{1,2} Bbar(S)_{2,1}^T
  bool psd = false;                // Tr(Omega^T M Omega) >= 0 over Skew(d)
  int rank_M = 0;
  int rank_B12 = 0;
  bool nondegenerate = false;      // critical && psd && rank_M >= d-1
  bool unique = false;             // rank_M == d (meaningful at an optimal alignment)
  Eigen::MatrixXd M;
};

// Requires m == 2 (ContractError otherwise).
TwoViewReport two_view_tests(const StressSystem& sys, const Alignment& S, double tol_crit = -1.0);

struct GraphRound {
  int views = 0;
  int components = 0;
};

struct GraphReport {
  Eigen::MatrixXi ranks;  // pairwise overlap ranks of the original views
  int G_components = 0;
  int Gbar_components = 0;
  int coarse_G_size = 0;     // |G*(S)|
  int coarse_Gbar_size = 0;  // |Gbar*(S)|
  std::vector<GraphRound> G_rounds, Gbar_rounds;
  bool nondeg_sufficient = false;  // |G*| = 1
  bool unique_sufficient = false;  // |Gbar*| = 1
};

// Coarsens G (edge iff rank >= d-1 on a nonempty overlap) and Gbar (edge iff rank = d) to a
// fixpoint. Throws ContractError unless S is perfect.
GraphReport overlap_graph_analysis(const StressSystem& sys, const Alignment& S);

struct PartitionReport {
  int d = 0, m = 0;
  std::uint64_t partitions = 0;
  int min_rank = 0;
  std::vector<int> argmin_A, argmin_B;  // 0-based; A holds view 0
  bool all_at_least_d_minus_1 = false;
  bool all_equal_d = false;
  // Contrapositive verdicts only; passing both is inconclusive.
  bool degenerate_implied = false;
  bool non_unique_implied = false;
};

// Enumerates every bipartition. Throws InputError when m > max_m, ContractError unless S is perfect.
PartitionReport partition_necessary_check(const StressSystem& sys, const Alignment& S, int max_m = 16,
                                          Exec exec = Exec::parallel);

struct Certificate {
  SkewStack Omega;
  bool trivial = false;
  Eigen::MatrixXd perturbation;  // d x n, empty for trivial certificates
};

// Null space of LL(S): the d(d-1)/2 trivial certificates first, then an orthonormal basis of the
// horizontal remainder. Throws ContractError when S is not a noiseless critical point.
std::vector<Certificate> extract_certificates(const StressSystem& sys, const AlignedStress& aligned,
                                              const CertificateMatrix& cert);

int stress_rank(const StressSystem& sys);

struct RigidityReport {
  int rank_R = 0, rank_R_target = 0;
  bool inf_rigid = false;
  int rank_C = 0;
  bool affine_rigid = false;
  bool perfect = false;
  double consensus_residual = 0.0;
  std::optional<TwoViewReport> two_view;
  std::optional<GraphReport> graph;
  std::optional<PartitionReport> partition;
  std::vector<Certificate> certificates;
  std::string note;
};

RigidityReport analyze_rigidity(const StressSystem& sys, const Alignment& S, int max_partition_m = 16);

}  // namespace palign
