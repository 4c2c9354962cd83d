#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palign/framework.hpp"

namespace palign {

// Named small frameworks in d = 2 with known overlap structure:
//   geom_intuit_a / _b / _c     two views sharing 1, 2, 3 non-collinear points
//   suff_cond_views_non_deg     four views hinged on one shared point pair (rank C = 3 < 6)
//   G_star_1                    three views pinned pairwise at single points (a rigid triangle)
//   nec_cond_loc_rigid_of_views four views pinned in a cycle (a flexible four-bar linkage)
//   grid                        10 x 10 unit grid, 3 x 3 tiles, overlap 0.3
std::vector<std::string> named_fixture_names();

// Throws InputError on an unknown name.
GeneratedFramework named_fixture(const std::string& name, std::uint64_t seed = 0);

}  // namespace palign
