#pragma once

#include <cstdint>
#include <optional>

#include "rdbev/core.hpp"

namespace rdbev {

struct LidarConfig {
  double azimuth_step_deg = 0.2;
  double max_range = 80.0;
  double ground_point_spacing = 1.0;
  int returns_per_hit = 3;
  double obstacle_z_min = 0.3;  // obstacle returns are drawn from (z_min, height)
  std::uint64_t seed = 0;

  void validate() const;
};

// Entry distance of the ray (origin, unit direction) into the scatterer's
// footprint disc, if it enters at a positive distance.
std::optional<double> ray_disc_entry(double dir_x, double dir_y, const Scatterer& s);

// Ray azimuths are k * azimuth_step for k covering [-180, 180). Each ray stops
// at the first footprint disc it enters: returns_per_hit obstacle points at the
// entry point, ground points every ground_point_spacing up to the stop distance.
PointCloud simulate_lidar(const Scene& scene, const LidarConfig& cfg);

}  // namespace rdbev
