// palign: generate, align, certify, rigidity and experiment workflows.
// Exit codes: 0 success, 2 input error, 3 non-convergence.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "palign/certify.hpp"
#include "palign/errors.hpp"
#include "palign/fixtures.hpp"
#include "palign/io.hpp"
#include "palign/manifold.hpp"
#include "palign/reports.hpp"
#include "palign/rgd.hpp"
#include "palign/rigidity.hpp"
#include "palign/spectral.hpp"
#include "palign/stress.hpp"

namespace fs = std::filesystem;
using namespace palign;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;

struct Globals {
  std::uint64_t seed = 0;
  bool verbose = false;
  std::string out;
  bool named_fixtures = false;
} g;

void log(const std::string& msg) {
  if (g.verbose) std::cerr << "[palign] " << msg << "\n";
}

void emit(const std::string& text, const std::string& path) {
  const std::string body = !text.empty() && text.back() == '\n' ? text : text + "\n";
  if (path.empty() || path == "-") {
    std::cout << body;
  } else {
    write_file(path, body);
  }
}

std::string truth_path_for(const std::string& out) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + ".truth.json")).string();
}

std::vector<double> parse_eps_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("--eps: cannot parse '" + tok + "' (expected start:step:end)");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw InputError("--eps expects start:step:end or a single value");
  const double a = parts[0], s = parts[1], b = parts[2];
  if (!(s > 0) || b < a || a < 0) throw InputError("--eps requires 0 <= start <= end and step > 0");
  const int n = static_cast<int>(std::floor((b - a) / s + 1e-9)) + 1;
  std::vector<double> eps;
  for (int k = 0; k < n; ++k) eps.push_back(a + k * s);
  return eps;
}

int write_named_fixtures() {
  const std::string dir = g.out.empty() ? "." : g.out;
  fs::create_directories(dir);
  for (const auto& name : named_fixture_names()) {
    const GeneratedFramework f = named_fixture(name, g.seed);
    write_file((fs::path(dir) / (name + ".json")).string(), serialize_framework(f.fw) + "\n");
    write_file((fs::path(dir) / (name + ".truth.json")).string(), serialize_alignment(f.truth) + "\n");
    std::cout << name << ": n=" << f.fw.n << " m=" << f.fw.m << " d=" << f.fw.d << "\n";
  }
  return 0;
}

Alignment load_alignment(const std::string& path, const StressSystem& sys) {
  const Alignment S = parse_alignment(read_file(path));
  if (S.d != sys.d || S.m() != sys.m) throw InputError("alignment in " + path + " does not match the framework shape");
  if (orthogonality_defect(S) > 1e-8) throw InputError("alignment in " + path + " has non-orthogonal blocks");
  return S;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch alignment by Riemannian gradient descent on O(d)^m / O(d)"};
  app.fallthrough();
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--verbose,-v", g.verbose, "Progress messages on stderr");
  app.add_option("--out,-o", g.out, "Output file (directory for --paper-fixtures)");
  app.add_flag("--paper-fixtures", g.named_fixtures, "Write the named fixture frameworks into the --out directory");

  // generate
  auto* gen = app.add_subcommand("generate", "Grid framework with ground-truth alignment");
  GridSpec spec;
  std::string fixture, truth_out;
  double gen_noise = 0.0;
  gen->add_option("--grid", spec.resolution, "Grid points per axis")->check(CLI::PositiveNumber);
  gen->add_option("--d", spec.d, "Dimension")->check(CLI::Range(1, 3));
  gen->add_option("--tiles", spec.tiles, "Tiles per axis")->check(CLI::PositiveNumber);
  gen->add_option("--overlap", spec.overlap, "Tile overlap fraction in (0,1)");
  gen->add_option("--translation-scale", spec.translation_scale, "Half-width of the random view translations");
  gen->add_option("--fixture", fixture, "Named fixture instead of a grid");
  gen->add_option("--noise", gen_noise, "Uniform ball noise radius added to local coordinates")->check(CLI::NonNegativeNumber);
  gen->add_option("--truth", truth_out, "Ground-truth alignment path (default <out>.truth.json)");

  // align
  auto* al = app.add_subcommand("align", "Run Riemannian gradient descent");
  std::string fw_path, init = "spectral", init_file, trace_path, reference_path, dump_dir;
  RgdConfig rcfg;
  al->add_option("--framework,-f", fw_path, "Framework JSON")->required();
  al->add_option("--init", init, "spectral | identity | file")->check(CLI::IsMember({"spectral", "identity", "file"}));
  al->add_option("--init-file", init_file, "Initial alignment JSON for --init file");
  al->add_option("--max-iters", rcfg.max_iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  al->add_option("--grad-tol", rcfg.grad_tol, "Gradient-norm stopping tolerance (default 1e-10 (1 + ||C||_F))");
  al->add_option("--beta", rcfg.beta, "Armijo contraction factor in (0,1)");
  al->add_option("--gamma", rcfg.gamma, "Armijo sufficient-decrease constant in (0,1)");
  al->add_option("--trace", trace_path, "Per-iteration CSV");
  al->add_option("--reference", reference_path, "Reference alignment for dist_to_ref and F*");
  al->add_option("--dump-matrices", dump_dir, "Directory for C.csv, B.csv, D.csv, L.csv");

  // certify
  auto* ce = app.add_subcommand("certify", "Criticality and non-degeneracy certificate");
  std::string al_path;
  double zeta = 0.5, cgamma = 0.1;
  ce->add_option("--framework,-f", fw_path, "Framework JSON")->required();
  ce->add_option("--alignment,-a", al_path, "Alignment JSON")->required();
  ce->add_option("--zeta", zeta, "Vicinity fraction in (0,1)");
  ce->add_option("--gamma", cgamma, "Armijo constant used for the rate q");

  // rigidity
  auto* ri = app.add_subcommand("rigidity", "Rigidity, overlap-rank and partition analyses");
  int max_m = 16;
  std::string cert_path;
  ri->add_option("--framework,-f", fw_path, "Framework JSON")->required();
  ri->add_option("--alignment,-a", al_path, "Alignment JSON")->required();
  ri->add_option("--max-partition-m", max_m, "Largest m for the exhaustive partition check");
  ri->add_option("--certificates", cert_path, "Also write the certificates to this JSON file");

  // experiment
  auto* ex = app.add_subcommand("experiment", "Noise sweep: SPEC then RGD at each noise level");
  std::string eps_spec = "0:0.02:0.2", truth_path, summary_path;
  SweepConfig scfg;
  bool serial = false;
  ex->add_option("--framework,-f", fw_path, "Noiseless framework JSON (default: the grid fixture)");
  ex->add_option("--truth", truth_path, "Ground-truth alignment JSON for --framework");
  ex->add_option("--eps", eps_spec, "Noise levels start:step:end");
  ex->add_option("--trials", scfg.trials, "Trials per noise level")->check(CLI::PositiveNumber);
  ex->add_option("--max-iters", scfg.rgd.max_iters, "RGD iterations per trial")->check(CLI::NonNegativeNumber);
  ex->add_option("--summary", summary_path, "Per-level medians as JSON");
  ex->add_flag("--serial", serial, "Run the sweep on one thread");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (g.named_fixtures) return write_named_fixtures();

    if (*gen) {
      if (g.out.empty()) throw InputError("generate: --out is required");
      spec.seed = g.seed;
      GeneratedFramework f = fixture.empty() ? generate_grid_framework(spec) : named_fixture(fixture, g.seed);
      if (gen_noise > 0) f.fw = inject_noise(f.fw, NoiseSpec{gen_noise, g.seed + 1});
      const std::string tp = truth_out.empty() ? truth_path_for(g.out) : truth_out;
      write_file(g.out, serialize_framework(f.fw) + "\n");
      write_file(tp, serialize_alignment(f.truth) + "\n");
      const Eigen::MatrixXi ranks = pairwise_overlap_ranks(f.fw);
      int edges = 0;
      std::vector<int> comp(f.fw.m);
      std::iota(comp.begin(), comp.end(), 0);
      std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
      for (int i = 0; i < f.fw.m; ++i)
        for (int j = i + 1; j < f.fw.m; ++j)
          if (ranks(i, j) >= f.fw.d - 1 && overlap_rank_pair(f.fw, i, j).n_shared > 0) {
            ++edges;
            comp[find(i)] = find(j);
          }
      int ncomp = 0;
      for (int i = 0; i < f.fw.m; ++i) ncomp += find(i) == i;
      std::cout << "n=" << f.fw.n << " m=" << f.fw.m << " d=" << f.fw.d << " edges(G)=" << edges
                << " components(G)=" << ncomp << (ncomp == 1 ? " (connected)" : " (disconnected)") << "\n";
      return 0;
    }

    if (*al) {
      const PatchFramework fw = parse_framework(read_file(fw_path));
      log("building patch-stress matrix");
      const StressSystem sys = build_patch_stress(fw);
      if (!dump_dir.empty()) dump_matrices(sys, dump_dir);
      QuotientAlignment S0;
      if (init == "spectral") {
        S0 = quotient_of(spectral_init(sys).S_spec);
      } else if (init == "identity") {
        S0 = quotient_of(Alignment::identity(sys.d, sys.m));
      } else {
        if (init_file.empty()) throw InputError("--init file requires --init-file");
        S0 = quotient_of(load_alignment(init_file, sys));
      }
      std::optional<Alignment> ref;
      if (!reference_path.empty()) ref = load_alignment(reference_path, sys);
      RgdResult res;
      bool step_failed = false;
      try {
        res = run_rgd(sys, S0, rcfg, ref ? &*ref : nullptr);
      } catch (const StepFailure& e) {
        std::cerr << "palign: " << e.what() << "\n";
        res = *e.partial;
        step_failed = true;
      }
      emit(align_result_json(res, sys, init), g.out);
      if (!trace_path.empty()) write_file(trace_path, trace_csv(res.trace));
      log("termination: " + to_string(res.reason) + " after " + std::to_string(res.iterations) + " iterations");
      return (res.reason == Termination::converged && !step_failed) ? 0 : kExitNoConvergence;
    }

    if (*ce) {
      const PatchFramework fw = parse_framework(read_file(fw_path));
      const StressSystem sys = build_patch_stress(fw);
      const Alignment S = load_alignment(al_path, sys);
      if (!(zeta > 0 && zeta < 1)) throw InputError("--zeta must lie in (0,1)");
      emit(certification_json(certify_alignment(sys, S, zeta, cgamma, g.seed)), g.out);
      return 0;
    }

    if (*ri) {
      const PatchFramework fw = parse_framework(read_file(fw_path));
      const StressSystem sys = build_patch_stress(fw);
      const Alignment S = load_alignment(al_path, sys);
      const RigidityReport rep = analyze_rigidity(sys, S, max_m);
      emit(rigidity_json(rep), g.out);
      if (!cert_path.empty()) {
        RigidityReport only;
        only.certificates = rep.certificates;
        write_file(cert_path, rigidity_json(only) + "\n");
      }
      return 0;
    }

    if (*ex) {
      GeneratedFramework base;
      if (fw_path.empty()) {
        base = named_fixture("grid", g.seed);
      } else {
        if (truth_path.empty()) throw InputError("experiment: --framework requires --truth");
        base.fw = parse_framework(read_file(fw_path));
        base.truth = parse_alignment(read_file(truth_path));
      }
      scfg.eps = parse_eps_range(eps_spec);
      scfg.seed = g.seed;
      scfg.exec = serial ? Exec::serial : Exec::parallel;
      log("running " + std::to_string(scfg.eps.size() * scfg.trials) + " trials");
      const NoiseSweepResult r = noise_sweep_experiment(base.fw, base.truth, scfg);
      emit(sweep_csv(r), g.out);
      if (!summary_path.empty()) write_file(summary_path, sweep_summary_json(r) + "\n");
      int inversions = 0;
      for (std::size_t k = 1; k < r.levels.size(); ++k)
        inversions += r.levels[k].median_lambda_d1 < r.levels[k - 1].median_lambda_d1;
      std::ostream& os = g.out.empty() || g.out == "-" ? std::cerr : std::cout;
      os << "lambda_{d+1}(C) median trend: " << inversions << " inversion(s) over " << r.levels.size() << " levels\n";
      os << "median log-ratio slope per level:";
      for (const auto& lv : r.levels) os << " " << lv.eps << ":" << lv.median_ratio_slope;
      os << "\n";
      return 0;
    }

    std::cerr << app.help() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "palign: input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ContractError& e) {
    std::cerr << "palign: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "palign: " << e.what() << "\n";
    return 1;
  }
}
