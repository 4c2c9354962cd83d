#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "palign/types.hpp"

namespace palign {

// Bipartite point/view incidence with local coordinates on each edge.
// Internally 0-based; the JSON format is 1-based.
struct PatchFramework {
  int d = 0;
  int n = 0;
  int m = 0;
  std::vector<std::vector<int>> view_points;  // ascending point ids of view i
  std::vector<Eigen::MatrixXd> view_coords;   // d x n_i, column j is x_{view_points[i][j], i}

  int num_edges() const;
  std::vector<std::vector<int>> point_views() const;
  // Column of point k inside view i, or -1.
  int local_index(int i, int k) const;

  bool operator==(const PatchFramework& other) const;
};

struct ValidationReport {
  bool ok = false;
  bool connected = false;
  std::vector<int> view_sizes;
  std::vector<bool> affine_nondeg;
  std::vector<int> offending_views;  // 0-based
};

// Throws InputError listing every structural defect (index ranges, shapes, non-finite entries).
void check_structure(const PatchFramework& fw);

ValidationReport validate_framework(const PatchFramework& fw);

// Connected components of the point/view graph as a label per view (points follow their views).
std::vector<int> view_components(const PatchFramework& fw, int* count = nullptr);

struct GridSpec {
  int resolution = 10;
  int d = 2;
  int tiles = 3;          // tiles per axis
  double overlap = 0.3;   // fraction of a tile width shared with its neighbour
  double translation_scale = 0.5;
  std::uint64_t seed = 0;
};

struct GeneratedFramework {
  PatchFramework fw;
  Alignment truth;            // S_i with S_i^T x_{k,i} + t_i = global point k
  Eigen::MatrixXd global;     // d x n
};

// Unit cube grid cut into axis-aligned overlapping tiles; each tile gets a random element of O(d)
// plus a translation. Throws InputError when a tile or an overlap cannot hold d+1 affinely
// independent points.
GeneratedFramework generate_grid_framework(const GridSpec& spec);

// Views given as point subsets of a global configuration (d x n); each view is mapped through a
// random rigid motion seeded by `seed`.
GeneratedFramework framework_from_global(const Eigen::MatrixXd& global,
                                         const std::vector<std::vector<int>>& views,
                                         std::uint64_t seed, double translation_scale = 0.5);

struct NoiseSpec {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

// Adds to every x_{k,i} an independent vector drawn uniformly from the epsilon ball.
PatchFramework inject_noise(const PatchFramework& fw, const NoiseSpec& spec);

// Drops view i; with drop_exclusive, also drops points seen only by view i. Points are renumbered
// in increasing order; `kept_points` receives the old id of each new point.
PatchFramework remove_view(const PatchFramework& fw, int i, bool drop_exclusive,
                           std::vector<int>* kept_points = nullptr);

}  // namespace palign
