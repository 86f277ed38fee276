#pragma once

// Exact maximin path search on a discretized landscape: among all grid paths
// from 0 to 1 using per-axis unit moves, find one whose smallest landscape
// value is as large as possible.

#include <vector>

#include "evopath/landscape.hpp"

namespace evopath {

struct MaximinPath {
  std::vector<Vec> path;  // grid points, first is 0, last is 1
  double maximin_value = 0.0;
};

// resolution = points per axis (>= 2); D must be <= 3.
MaximinPath landscape_oracle(const LandscapeConfig& cfg, int resolution);

// Smallest noiseless landscape value among the given points.
double min_value_along(const std::vector<Vec>& points, const LandscapeConfig& cfg);

}  // namespace evopath
