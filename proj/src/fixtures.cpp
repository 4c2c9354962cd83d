#include "palign/fixtures.hpp"

#include "palign/errors.hpp"

namespace palign {

namespace {

Eigen::MatrixXd points2(std::initializer_list<std::pair<double, double>> pts) {
  Eigen::MatrixXd X(2, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index c = 0;
  for (const auto& [x, y] : pts) X.col(c++) << x, y;
  return X;
}

}  // namespace

std::vector<std::string> named_fixture_names() {
  return {"geom_intuit_a", "geom_intuit_b", "geom_intuit_c", "suff_cond_views_non_deg",
          "G_star_1",      "nec_cond_loc_rigid_of_views", "grid"};
}

GeneratedFramework named_fixture(const std::string& name, std::uint64_t seed) {
  if (name == "geom_intuit_a") {
    const auto X = points2({{0, 0}, {-1, 0.3}, {-0.6, -0.8}, {1.1, 0.2}, {0.5, 0.9}});
    return framework_from_global(X, {{0, 1, 2}, {0, 3, 4}}, seed);
  }
  if (name == "geom_intuit_b") {
    const auto X = points2({{0, 0}, {0.1, 1}, {-1, 0.4}, {1, 0.65}});
    return framework_from_global(X, {{0, 1, 2}, {0, 1, 3}}, seed);
  }
  if (name == "geom_intuit_c") {
    const auto X = points2({{0, 0}, {1, 0}, {0.3, 0.9}, {-0.8, 0.2}, {1.6, 0.7}});
    return framework_from_global(X, {{0, 1, 2, 3}, {0, 1, 2, 4}}, seed);
  }
  if (name == "suff_cond_views_non_deg") {
    const auto X = points2({{0, 0}, {1, 0.1}, {0.4, 1.0}, {0.6, -1.1}, {-0.7, 0.5}, {1.5, -0.6}});
    return framework_from_global(X, {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}, {0, 1, 5}}, seed);
  }
  if (name == "G_star_1") {
    // Pins 0, 1, 2 are shared by exactly two views each; 3, 4, 5 are exclusive.
    const auto X = points2({{0, 0}, {2, 0}, {1, 1.7}, {1, -0.6}, {2.1, 1.2}, {-0.2, 1.1}});
    return framework_from_global(X, {{0, 1, 3}, {1, 2, 4}, {2, 0, 5}}, seed);
  }
  if (name == "nec_cond_loc_rigid_of_views") {
    // Pins 0-3 close a cycle of four bodies; 4-7 are exclusive points off each bar.
    const auto X = points2({{0, 0}, {2, 0.2}, {2.3, 1.8}, {-0.2, 1.5},
                            {1.0, -0.7}, {2.9, 1.0}, {1.1, 2.5}, {-0.9, 0.6}});
    return framework_from_global(X, {{3, 0, 7}, {0, 1, 4}, {1, 2, 5}, {2, 3, 6}}, seed);
  }
  if (name == "grid") {
    GridSpec g;
    g.seed = seed;
    return generate_grid_framework(g);
  }
  throw InputError("unknown fixture '" + name + "'");
}

}  // namespace palign
