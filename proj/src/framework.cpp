#include "palign/framework.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "palign/errors.hpp"
#include "palign/linalg.hpp"

namespace palign {

int PatchFramework::num_edges() const {
  int e = 0;
  for (const auto& v : view_points) e += static_cast<int>(v.size());
  return e;
}

std::vector<std::vector<int>> PatchFramework::point_views() const {
  std::vector<std::vector<int>> pv(n);
  for (int i = 0; i < m; ++i)
    for (int k : view_points[i]) pv[k].push_back(i);
  return pv;
}

int PatchFramework::local_index(int i, int k) const {
  const auto& v = view_points[i];
  auto it = std::lower_bound(v.begin(), v.end(), k);
  if (it == v.end() || *it != k) return -1;
  return static_cast<int>(it - v.begin());
}

bool PatchFramework::operator==(const PatchFramework& o) const {
  if (d != o.d || n != o.n || m != o.m || view_points != o.view_points) return false;
  for (int i = 0; i < m; ++i)
    if (view_coords[i].rows() != o.view_coords[i].rows() || view_coords[i].cols() != o.view_coords[i].cols() ||
        view_coords[i] != o.view_coords[i])
      return false;
  return true;
}

void check_structure(const PatchFramework& fw) {
  std::vector<std::string> defects;
  if (fw.d < 1) defects.push_back("d must be >= 1");
  if (fw.n < 1) defects.push_back("n must be >= 1");
  if (fw.m < 1) defects.push_back("m must be >= 1");
  if (static_cast<int>(fw.view_points.size()) != fw.m || static_cast<int>(fw.view_coords.size()) != fw.m)
    defects.push_back("view arrays do not have m entries");
  for (std::size_t i = 0; i < std::min(fw.view_points.size(), fw.view_coords.size()); ++i) {
    const auto& pts = fw.view_points[i];
    const auto& X = fw.view_coords[i];
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const int k = pts[j];
      if (k < 0 || k >= fw.n) {
        std::ostringstream os;
        os << "view " << i + 1 << ": point id " << k + 1 << " outside [1," << fw.n << "]";
        defects.push_back(os.str());
      }
      if (j > 0 && pts[j - 1] >= k) {
        std::ostringstream os;
        os << "view " << i + 1 << ": point ids not strictly increasing at (" << k + 1 << "," << i + 1 << ")";
        defects.push_back(os.str());
      }
    }
    if (X.rows() != fw.d || X.cols() != static_cast<Eigen::Index>(pts.size())) {
      std::ostringstream os;
      os << "view " << i + 1 << ": coordinate block is " << X.rows() << "x" << X.cols() << ", expected " << fw.d
         << "x" << pts.size();
      defects.push_back(os.str());
    } else if (!X.allFinite()) {
      std::ostringstream os;
      os << "view " << i + 1 << ": non-finite coordinate";
      defects.push_back(os.str());
    }
  }
  if (!defects.empty()) {
    std::ostringstream os;
    os << "malformed framework:";
    for (const auto& s : defects) os << "\n  " << s;
    throw InputError(os.str());
  }
}

std::vector<int> view_components(const PatchFramework& fw, int* count) {
  std::vector<int> parent(fw.n + fw.m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < fw.m; ++i)
    for (int k : fw.view_points[i]) parent[find(k)] = find(fw.n + i);
  std::vector<int> label(fw.n + fw.m, -1);
  int c = 0;
  for (int v = 0; v < fw.n + fw.m; ++v) {
    const int r = find(v);
    if (label[r] < 0) label[r] = c++;
    label[v] = label[r];
  }
  if (count) *count = c;
  return std::vector<int>(label.begin() + fw.n, label.end());
}

ValidationReport validate_framework(const PatchFramework& fw) {
  check_structure(fw);
  ValidationReport rep;
  int comps = 0;
  view_components(fw, &comps);
  rep.connected = comps == 1;
  rep.view_sizes.resize(fw.m);
  rep.affine_nondeg.resize(fw.m);
  for (int i = 0; i < fw.m; ++i) {
    const auto& X = fw.view_coords[i];
    rep.view_sizes[i] = static_cast<int>(X.cols());
    bool ok = X.cols() >= fw.d + 1;
    if (ok) {
      const Eigen::MatrixXd Xc = X.colwise() - X.rowwise().mean();
      const Eigen::VectorXd s = singular_values(Xc);
      ok = s(0) > 0 && count_above(s, 1e-9 * s(0)) == fw.d;
    }
    rep.affine_nondeg[i] = ok;
    if (!ok) rep.offending_views.push_back(i);
  }
  rep.ok = rep.connected && rep.offending_views.empty();
  return rep;
}

GeneratedFramework framework_from_global(const Eigen::MatrixXd& global, const std::vector<std::vector<int>>& views,
                                         std::uint64_t seed, double translation_scale) {
  const int d = static_cast<int>(global.rows());
  GeneratedFramework g;
  g.global = global;
  g.fw.d = d;
  g.fw.n = static_cast<int>(global.cols());
  g.fw.m = static_cast<int>(views.size());
  g.truth = Alignment(d, g.fw.m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-translation_scale, translation_scale);
  for (int i = 0; i < g.fw.m; ++i) {
    std::vector<int> pts = views[i];
    std::sort(pts.begin(), pts.end());
    const Eigen::MatrixXd R = random_orthogonal(d, rng);
    Eigen::VectorXd b(d);
    for (int r = 0; r < d; ++r) b(r) = u(rng);
    Eigen::MatrixXd X(d, pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) X.col(j) = R * global.col(pts[j]) + b;
    g.truth.block(i) = R;
    g.fw.view_points.push_back(std::move(pts));
    g.fw.view_coords.push_back(std::move(X));
  }
  return g;
}

GeneratedFramework generate_grid_framework(const GridSpec& spec) {
  const int R = spec.resolution, d = spec.d, T = spec.tiles;
  if (R < 2) throw InputError("grid resolution must be >= 2");
  if (d < 1 || d > 3) throw InputError("grid dimension must be 1, 2 or 3");
  if (T < 1) throw InputError("tiles per axis must be >= 1");
  if (!(spec.overlap > 0.0 && spec.overlap < 1.0)) throw InputError("overlap fraction must lie in (0,1)");

  // Tile width w (points per axis) so that T tiles with fractional overlap cover R points.
  const int w = T == 1 ? R : std::min(R, static_cast<int>(std::ceil(R / (T - (T - 1) * spec.overlap))));
  std::vector<int> start(T, 0);
  for (int t = 1; t < T; ++t) start[t] = static_cast<int>(std::lround(static_cast<double>(t) * (R - w) / (T - 1)));
  long tile_points = 1;
  for (int a = 0; a < d; ++a) tile_points *= w;
  if (w < 2 || tile_points < d + 1) {
    std::ostringstream os;
    os << "tiling gives views with " << tile_points << " points; at least " << d + 1
       << " affinely independent points are required (grid " << R << ", tiles " << T << ")";
    throw InputError(os.str());
  }
  for (int t = 0; t + 1 < T; ++t) {
    const int shared = start[t] + w - start[t + 1];
    if (shared < 2) {
      std::ostringstream os;
      os << "adjacent tiles share " << std::max(shared, 0) << " grid lines; at least 2 are needed for "
         << d + 1 << " affinely independent shared points (increase overlap or resolution)";
      throw InputError(os.str());
    }
    if (start[t + 1] <= start[t]) throw InputError("tiles coincide; reduce the number of tiles");
  }

  long n = 1, m = 1;
  for (int a = 0; a < d; ++a) {
    n *= R;
    m *= T;
  }
  Eigen::MatrixXd global(d, n);
  for (long k = 0; k < n; ++k) {
    long r = k;
    for (int a = 0; a < d; ++a) {
      global(a, k) = static_cast<double>(r % R) / (R - 1);
      r /= R;
    }
  }
  std::vector<std::vector<int>> views;
  for (long v = 0; v < m; ++v) {
    std::vector<int> lo(d);
    long r = v;
    for (int a = 0; a < d; ++a) {
      lo[a] = start[r % T];
      r /= T;
    }
    std::vector<int> pts;
    for (long k = 0; k < n; ++k) {
      long q = k;
      bool in = true;
      for (int a = 0; a < d && in; ++a) {
        const int c = static_cast<int>(q % R);
        q /= R;
        in = c >= lo[a] && c < lo[a] + w;
      }
      if (in) pts.push_back(static_cast<int>(k));
    }
    views.push_back(std::move(pts));
  }
  return framework_from_global(global, views, spec.seed, spec.translation_scale);
}

PatchFramework inject_noise(const PatchFramework& fw, const NoiseSpec& spec) {
  PatchFramework out = fw;
  if (spec.epsilon == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < out.m; ++i) {
    auto& X = out.view_coords[i];
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      Eigen::VectorXd dir(fw.d);
      double nrm = 0.0;
      while (nrm == 0.0) {
        for (int r = 0; r < fw.d; ++r) dir(r) = g(rng);
        nrm = dir.norm();
      }
      const double radius = spec.epsilon * std::pow(u(rng), 1.0 / fw.d);
      X.col(j) += (radius / nrm) * dir;
    }
  }
  return out;
}

PatchFramework remove_view(const PatchFramework& fw, int i, bool drop_exclusive, std::vector<int>* kept_points) {
  if (i < 0 || i >= fw.m) throw ContractError("remove_view: view index out of range");
  const auto pv = fw.point_views();
  std::vector<int> new_id(fw.n, -1), old_id;
  for (int k = 0; k < fw.n; ++k) {
    const bool exclusive = pv[k].size() == 1 && pv[k][0] == i;
    if (drop_exclusive && exclusive) continue;
    new_id[k] = static_cast<int>(old_id.size());
    old_id.push_back(k);
  }
  PatchFramework out;
  out.d = fw.d;
  out.n = static_cast<int>(old_id.size());
  out.m = fw.m - 1;
  for (int v = 0; v < fw.m; ++v) {
    if (v == i) continue;
    std::vector<int> pts;
    for (int k : fw.view_points[v]) pts.push_back(new_id[k]);
    out.view_points.push_back(std::move(pts));
    out.view_coords.push_back(fw.view_coords[v]);
  }
  if (kept_points) *kept_points = old_id;
  return out;
}

}  // namespace palign
