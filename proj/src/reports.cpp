#include "palign/reports.hpp"

#include <cmath>

#include "json.hpp"

namespace palign {

using nlohmann::json;

namespace {

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json blocks_json(const BlockStack& S) {
  json blocks = json::array();
  for (int i = 0; i < S.m(); ++i) {
    json b = json::array();
    for (int r = 0; r < S.d; ++r)
      for (int c = 0; c < S.d; ++c) b.push_back(num(S.block(i)(r, c)));
    blocks.push_back(b);
  }
  return blocks;
}

json radius_json(const RadiusReport& r) {
  return {{"c1", num(r.c1)},       {"c2", num(r.c2)},         {"c3", num(r.c3)},
          {"delta", num(r.delta)}, {"delta0", num(r.delta0)}, {"zeta", num(r.zeta)},
          {"gamma", num(r.gamma)}, {"r", num(r.r)},           {"q", num(r.q)},
          {"noiseless", r.noiseless}};
}

}  // namespace

std::string certification_json(const CertificationReport& r) {
  json j;
  j["critical"] = r.critical;
  j["critical_residual"] = num(r.critical_residual);
  j["verdict"] = to_string(r.verdict);
  j["nondegenerate"] = r.verdict == Verdict::nondegenerate;
  j["lambda_key"] = num(r.lambda_key);
  j["lambda_minus"] = num(r.lambda_minus);
  j["lambda_plus"] = num(r.lambda_plus);
  j["tau_eig"] = num(r.tau_eig);
  j["rank_LL"] = r.rank_LL;
  j["rank_target"] = r.rank_target;
  j["radius"] = r.radius_defined ? radius_json(r.radius) : json(nullptr);
  j["invariance_check"] = r.invariance_check;
  return j.dump(1);
}

std::string rigidity_json(const RigidityReport& r) {
  json j;
  j["rank_R"] = r.rank_R;
  j["rank_R_target"] = r.rank_R_target;
  j["inf_rigid"] = r.inf_rigid;
  j["rank_C"] = r.rank_C;
  j["affine_rigid"] = r.affine_rigid;
  j["perfect"] = r.perfect;
  j["consensus_residual"] = num(r.consensus_residual);
  if (r.two_view) {
    const auto& t = *r.two_view;
    j["two_view"] = {{"critical", t.critical}, {"critical_residual", num(t.critical_residual)},
                     {"psd", t.psd},           {"rank_M", t.rank_M},
                     {"rank_B12", t.rank_B12}, {"nondegenerate", t.nondegenerate},
                     {"unique", t.unique}};
  } else {
    j["two_view"] = nullptr;
  }
  if (r.graph) {
    const auto& g = *r.graph;
    json rg = json::array(), rgb = json::array();
    for (const auto& x : g.G_rounds) rg.push_back({{"views", x.views}, {"components", x.components}});
    for (const auto& x : g.Gbar_rounds) rgb.push_back({{"views", x.views}, {"components", x.components}});
    j["graph_G_components"] = g.G_components;
    j["graph_Gbar_components"] = g.Gbar_components;
    j["coarse_G_size"] = g.coarse_G_size;
    j["coarse_Gbar_size"] = g.coarse_Gbar_size;
    j["G_rounds"] = rg;
    j["Gbar_rounds"] = rgb;
    j["nondeg_sufficient"] = g.nondeg_sufficient;
    j["unique_sufficient"] = g.unique_sufficient;
    j["unique"] = g.unique_sufficient;
  } else {
    for (const char* k : {"graph_G_components", "graph_Gbar_components", "coarse_G_size", "coarse_Gbar_size"})
      j[k] = nullptr;
  }
  if (r.partition) {
    const auto& p = *r.partition;
    auto one_based = [](const std::vector<int>& v) {
      json a = json::array();
      for (int i : v) a.push_back(i + 1);
      return a;
    };
    j["partition_check"] = {{"partitions", p.partitions},
                            {"min_rank", p.min_rank},
                            {"argmin_A", one_based(p.argmin_A)},
                            {"argmin_B", one_based(p.argmin_B)},
                            {"all_at_least_d_minus_1", p.all_at_least_d_minus_1},
                            {"all_equal_d", p.all_equal_d},
                            {"degenerate_implied", p.degenerate_implied},
                            {"non_unique_implied", p.non_unique_implied},
                            {"converse_status", "unverified"}};
  } else {
    j["partition_check"] = nullptr;
  }
  json certs = json::array();
  for (const auto& c : r.certificates) certs.push_back({{"trivial", c.trivial}, {"blocks", blocks_json(c.Omega)}});
  j["certificates"] = certs;
  j["note"] = r.note;
  return j.dump(1);
}

std::string align_result_json(const RgdResult& r, const StressSystem& sys, const std::string& init) {
  json j;
  j["init"] = init;
  j["termination"] = to_string(r.reason);
  j["converged"] = r.reason == Termination::converged;
  j["iterations"] = r.iterations;
  j["final_F"] = num(r.final_F);
  j["final_grad_norm"] = num(r.final_grad_norm);
  j["grad_tol"] = num(default_grad_tol(sys));
  j["C_fro"] = num(sys.C_fro);
  j["alignment"] = {{"d", r.final_alignment.d}, {"m", r.final_alignment.m()}, {"blocks", blocks_json(r.final_alignment)}};
  return j.dump(1);
}

std::string sweep_summary_json(const NoiseSweepResult& r) {
  json levels = json::array();
  for (const auto& lv : r.levels)
    levels.push_back({{"eps", lv.eps},
                      {"median_lambda_d1", num(lv.median_lambda_d1)},
                      {"median_ratio_slope", num(lv.median_ratio_slope)},
                      {"median_F_final", num(lv.median_F_final)},
                      {"converged", lv.converged},
                      {"trials", lv.trials}});
  return json{{"lambda_d1_C0", num(r.lambda_d1_C0)}, {"levels", levels}}.dump(1);
}

}  // namespace palign
