#pragma once

#include "rdbev/core.hpp"

namespace rdbev {

inline constexpr double kDefaultGroundZ = 0.3;
inline constexpr double kDefaultObservabilityAzimuthRes = 0.05;

// Keeps exactly the points with z > z_min, compared in float.
PointCloud remove_ground(const PointCloud& pc, double z_min = kDefaultGroundZ);

BevMask occupancy_from_points(const PointCloud& nonground, const BevGridSpec& grid);

// Azimuth bin of a direction: bins are centered on k * res and partition
// [-180, 180).
long azimuth_bin(double azimuth_deg, double res_deg);

// 2D ray casting from the LiDAR origin. Per azimuth bin the endpoint is the
// nearest non-ground return, or, without one, the farthest return of any kind.
// Every cell the bin's central ray passes through between the origin and the
// endpoint is marked (exact grid traversal); the endpoint return's own cell is
// marked too.
BevMask observability_mask(const PointCloud& all, const PointCloud& nonground,
                           const BevGridSpec& grid,
                           double azimuth_res_deg = kDefaultObservabilityAzimuthRes);

struct Supervision {
  BevLabel label;      // occupancy restricted to observable cells
  BevMask sup;         // hfov AND observable
  BevMask unknown;     // hfov AND NOT observable
};

// Throws GridMismatch when the masks are on different grids.
Supervision build_supervision(const BevMask& occupancy, const BevMask& observable,
                              const BevMask& hfov);

// Full label pipeline for one cloud: ground removal, occupancy, observability,
// and the supervision masks.
Supervision supervise_point_cloud(const PointCloud& pc, const BevGridSpec& grid,
                                  const BevMask& hfov, double z_min = kDefaultGroundZ,
                                  double azimuth_res_deg = kDefaultObservabilityAzimuthRes);

}  // namespace rdbev
