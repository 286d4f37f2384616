#include "rdbev/lidar_sim.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace rdbev {

void LidarConfig::validate() const {
  if (!(azimuth_step_deg > 0.0)) throw ConfigError("lidar azimuth step must be > 0");
  if (!(max_range > 0.0)) throw ConfigError("lidar max range must be > 0");
  if (!(ground_point_spacing > 0.0)) throw ConfigError("ground point spacing must be > 0");
  if (returns_per_hit < 1) throw ConfigError("returns_per_hit must be >= 1");
}

std::optional<double> ray_disc_entry(double dir_x, double dir_y, const Scatterer& s) {
  const double along = dir_x * s.x + dir_y * s.y;
  const double center_sq = s.x * s.x + s.y * s.y;
  const double disc = s.radius * s.radius - (center_sq - along * along);
  if (disc < 0.0) return std::nullopt;
  const double entry = along - std::sqrt(disc);
  // An origin inside the footprint has no entry point.
  if (entry <= 0.0) return std::nullopt;
  return entry;
}

PointCloud simulate_lidar(const Scene& scene, const LidarConfig& cfg) {
  scene.validate();
  cfg.validate();
  PointCloud pc;
  std::mt19937_64 rng(cfg.seed);
  const long num_rays = std::lround(360.0 / cfg.azimuth_step_deg);
  const long first = -num_rays / 2;

  for (long k = first; k < first + num_rays; ++k) {
    const double az = deg2rad(static_cast<double>(k) * cfg.azimuth_step_deg);
    const double dx = std::cos(az);
    const double dy = std::sin(az);

    double hit = std::numeric_limits<double>::infinity();
    const Scatterer* hit_by = nullptr;
    for (const auto& s : scene.scatterers) {
      auto t = ray_disc_entry(dx, dy, s);
      if (t && *t < hit) {
        hit = *t;
        hit_by = &s;
      }
    }
    if (hit > cfg.max_range) hit_by = nullptr;

    const double stop = hit_by ? hit : cfg.max_range;
    for (long n = 1;; ++n) {
      const double t = static_cast<double>(n) * cfg.ground_point_spacing;
      if (t > stop) break;
      pc.points.push_back({static_cast<float>(t * dx), static_cast<float>(t * dy), 0.0F, true});
    }

    if (hit_by) {
      const double z_hi = std::max(hit_by->height, cfg.obstacle_z_min + 1e-3);
      std::uniform_real_distribution<double> zdist(cfg.obstacle_z_min, z_hi);
      for (int r = 0; r < cfg.returns_per_hit; ++r) {
        float z = static_cast<float>(zdist(rng));
        while (z <= static_cast<float>(cfg.obstacle_z_min))
          z = std::nextafter(z, std::numeric_limits<float>::infinity());
        pc.points.push_back(
            {static_cast<float>(hit * dx), static_cast<float>(hit * dy), z, false});
      }
    }
  }
  return pc;
}

}  // namespace rdbev
